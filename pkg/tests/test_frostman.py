"""Constructive Frostman measures: caps, saturation, and the witness pipeline."""

import math

import numpy as np
import pytest

from gmtkit.content import density_levels, dyadic_content
from gmtkit.dyadic import Box, DyadicCube, Region
from gmtkit.frostman import DegenerateGaugeError, FrostmanResult, frostman_construct
from gmtkit.gauges import PowerGauge, PowerLogGauge, TableGauge
from gmtkit.cli import cantor_region


HT = PowerGauge(1.0)


def sweep_caps(result: FrostmanResult, gauge, level: int) -> float:
    """Exhaustive cap check over every cube holding mass; returns the worst
    mass/h(r) ratio."""
    mu = result.measure
    box = mu.box
    worst = 0.0
    leaf_idx = mu.leaf_indices(level)
    for l in range(0, level + 1):
        cap = gauge(box.cube_radius(l))
        anc = leaf_idx >> (level - l)
        _, inverse = np.unique(anc, axis=0, return_inverse=True)
        sums = np.bincount(inverse, weights=mu.masses)
        worst = max(worst, float(sums.max()) / cap)
    return worst


def test_single_cube_region():
    region = Region(1, [DyadicCube(3, (5,))])
    res = frostman_construct(region, HT, 3)
    assert res.measure.n_atoms == 1
    assert res.total_mass == pytest.approx(HT(Box((0.0,), 1.0).cube_radius(3)))
    assert list(res.saturated_cover) == [DyadicCube(3, (5,))]


def test_full_interval_saturates_every_level():
    region = Region(1, [DyadicCube(0, (0,))])
    res = frostman_construct(region, HT, 6)
    # level-l cube holds 2^-(l+1) = h(r_l): exact saturation everywhere
    assert res.total_mass == pytest.approx(0.5, rel=1e-12)
    assert sweep_caps(res, HT, 6) == pytest.approx(1.0, rel=1e-12)
    mu = res.measure
    for l in (0, 2, 4):
        q = DyadicCube(l, (0,) * 1)
        assert mu.cube_mass(q) == pytest.approx(HT(mu.box.cube_radius(l)), rel=1e-12)


def test_cantor_iterate_invariants():
    region = cantor_region(6)
    res = frostman_construct(region, HT, 12)
    worst = sweep_caps(res, HT, 12)
    assert worst <= 1.0 + 1e-12
    # generation cubes are exactly saturated
    assert worst == pytest.approx(1.0, rel=1e-12)
    price = res.cover_price(HT)
    assert res.total_mass == pytest.approx(price, rel=1e-12)
    content = dyadic_content(region, HT, math.inf, 12).value
    assert res.total_mass >= content - 1e-12
    # equality here: the generation antichains all price the same
    assert res.total_mass == pytest.approx(math.sqrt(2) / 2, rel=1e-12)


def test_oversaturated_start_rescales():
    # a gauge tiny at the root forces cascading rescales
    g = TableGauge([(0.0, 0.0), (0.05, 0.04), (0.2, 0.05), (1.0, 0.06)])
    region = Region(1, [DyadicCube(0, (0,))])
    res = frostman_construct(region, g, 5)
    assert sweep_caps(res, g, 5) <= 1.0 + 1e-12
    assert res.total_mass == pytest.approx(res.cover_price(g), rel=1e-9)
    assert res.total_mass >= dyadic_content(region, g, math.inf, 5).value - 1e-12


def test_errors():
    with pytest.raises(ValueError):
        frostman_construct(Region(1), HT, 3)
    degenerate = TableGauge([(0.0, 0.0), (0.9, 0.0001), (1.0, 1.0)])

    class ZeroAtLeaf(PowerGauge):
        def __call__(self, t):
            return 0.0

    with pytest.raises(DegenerateGaugeError):
        frostman_construct(Region(1, [DyadicCube(0, (0,))]), ZeroAtLeaf(1.0), 4)
    del degenerate


def test_witness_pipeline_strict_decrease_on_full_square():
    """Theorem-1.1 witness: against a gauge with h(t)/t^{N-1} -> 0, the
    construction's codimension-one density maxima strictly decrease when
    every level saturates (full square: the measure is uniform)."""
    gauge = PowerLogGauge(1.0, 1.0)
    region = Region(2, [DyadicCube(0, (0, 0))])
    res = frostman_construct(region, gauge, 6)
    witness = density_levels(res.measure, PowerGauge(1.0), range(0, 7))
    vals = [v for _, v in witness]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_witness_pipeline_cantor_plateau_decreases_with_depth():
    """On the Cantor iterate the power_log construction saturates at leaf
    scale only; the density plateau shrinks as the construction deepens,
    which is the finite-resolution trace of the vanishing density limit."""
    gauge = PowerLogGauge(1.0, 1.0)
    plateaus = []
    for depth in (3, 4, 5):
        region = cantor_region(depth)
        res = frostman_construct(region, gauge, 2 * depth)
        table = density_levels(res.measure, PowerGauge(1.0), range(1, 2 * depth + 1))
        plateaus.append(max(v for _, v in table))
    assert plateaus[0] > plateaus[1] > plateaus[2]
