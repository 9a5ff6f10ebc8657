"""Constructive Frostman measures on dyadic regions.

Start from the gauge value on every deepest cube of the region and push
caps down from coarse levels: whenever the mass inside a cube exceeds
the gauge price of its circumscribed ball, everything below is scaled
proportionally.  The result saturates a canonical antichain of cubes
whose price equals the total mass, which therefore dominates the dyadic
content of the region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dyadic import Box, DyadicCube, Region
from .gauges import Gauge
from .measures import AtomicMeasure


class DegenerateGaugeError(ValueError):
    """Gauge vanishes at the working resolution."""


@dataclass(frozen=True)
class FrostmanResult:
    measure: AtomicMeasure
    saturated_cover: Region
    total_mass: float
    level: int

    def cover_price(self, gauge: Gauge) -> float:
        box = self.measure.box
        return float(sum(gauge(q.radius(box)) for q in self.saturated_cover))


def _level_groups(leaf_idx: np.ndarray, level: int, max_level: int):
    """Group leaf rows by their level-`level` ancestor index."""
    shift = max_level - level
    anc = leaf_idx >> shift
    _, inverse = np.unique(anc, axis=0, return_inverse=True)
    return anc, inverse


def frostman_construct(region: Region, gauge: Gauge, level: int, box: Box | None = None,
                       saturation_rtol: float = 1e-9) -> FrostmanResult:
    """Build a measure supported in `region` with mass(Q) <= h(r_Q) for every
    dyadic cube, saturating a cover of the region.

    The per-cube rescale is proportional, so the construction is independent
    of traversal order within a level.
    """
    if region.is_empty:
        raise ValueError("cannot build a Frostman measure on an empty region")
    if box is None:
        box = Box((0.0,) * region.dim, 1.0)
    dim = region.dim
    if gauge(box.cube_radius(level)) <= 0.0:
        raise DegenerateGaugeError(f"h(r) = 0 at leaf level {level}")

    leaves = region.refine_to(level)
    leaf_idx = np.asarray([q.index for q in leaves], dtype=np.int64)
    masses = np.full(len(leaves), gauge(box.cube_radius(level)), dtype=float)

    for l in range(level - 1, -1, -1):
        cap = gauge(box.cube_radius(l))
        _, inverse = _level_groups(leaf_idx, l, level)
        sums = np.bincount(inverse, weights=masses)
        factors = np.ones_like(sums)
        over = sums > cap
        factors[over] = cap / sums[over]
        masses *= factors[inverse]

    # final sweep: certify the cap at every level and collect maximal
    # saturated cubes (they cover the region and price its total mass)
    saturated = []
    covered_mask = np.zeros(len(leaves), dtype=bool)
    for l in range(0, level + 1):
        cap = gauge(box.cube_radius(l))
        shift = level - l
        anc = leaf_idx >> shift
        uniq, first_idx, inverse = np.unique(anc, axis=0, return_index=True, return_inverse=True)
        sums = np.bincount(inverse, weights=masses)
        if np.any(sums > cap * (1.0 + 1e-12)):
            raise AssertionError("cap invariant violated after construction")
        new_sat = []
        for g in range(len(uniq)):
            if covered_mask[first_idx[g]]:
                continue
            if sums[g] >= cap * (1.0 - saturation_rtol):
                saturated.append(DyadicCube(l, tuple(uniq[g])))
                new_sat.append(g)
        if new_sat:
            covered_mask |= np.isin(inverse, new_sat)
    if not covered_mask.all():
        raise AssertionError("saturated cover fails to cover the region")

    positions = (np.asarray(box.origin) + box.spacing(level) * (leaf_idx + 0.5))
    measure = AtomicMeasure(box, positions, masses)
    cover = Region(dim, saturated)
    return FrostmanResult(measure, cover, float(masses.sum()), level)
