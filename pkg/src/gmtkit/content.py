"""Exact dyadic Hausdorff content, density suprema, and concentration profiles.

The delta-capped content of a region A is the minimum of sum h(r_Q)
over antichains of dyadic cubes covering A with r_Q <= delta.  Covers
are drawn from the tree spanned by A; when the cap disqualifies a cube
of A itself, the cover descends uniformly below it (all 2^N children at
a time) down to `max_level`, which is the only way to cover a full cube
with smaller ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import Box, DyadicCube, Region, spanning_tree, tree_root
from .gauges import Gauge
from .measures import AtomicMeasure, WeightedRestriction


class InfeasibleCoverError(ValueError):
    """No admissible cover: the radius cap is below the deepest allowed cubes."""


@dataclass(frozen=True)
class ContentResult:
    value: float
    optimal_cover: Region
    delta_cap: float

    def cover_price(self, box: Box, gauge: Gauge) -> float:
        return float(sum(gauge(q.radius(box)) for q in self.optimal_cover))


def _descent_cost(level: int, dim: int, box: Box, gauge: Gauge, delta: float, max_level: int):
    """(cost, chosen_level) of covering one full level-`level` cube with
    admissible descendants; the homogeneous recursion visits each level once."""
    best_cost = math.inf
    best_level = None
    mult = 1.0
    for l in range(level, max_level + 1):
        r = box.cube_radius(l)
        if r <= delta:
            cost = mult * gauge(r)
            if cost < best_cost:
                best_cost = cost
                best_level = l
        mult *= 2.0**dim
    if best_level is None:
        raise InfeasibleCoverError(
            f"no admissible cover: delta={delta} is below the level-{max_level} cube radius"
        )
    return best_cost, best_level


def _expand_full(cube: DyadicCube, level: int) -> list:
    gap = level - cube.level
    base = np.asarray(cube.index, dtype=np.int64) << gap
    offs = np.indices((2**gap,) * cube.dim).reshape(cube.dim, -1).T
    return [DyadicCube(level, tuple(base + o)) for o in offs]


def dyadic_content(region: Region, gauge: Gauge, delta: float, max_level: int, box: Box | None = None) -> ContentResult:
    """Exact minimum-price dyadic cover of `region` under the radius cap.

    Bottom-up over the spanning tree: a node closes at price h(r_Q) when
    admissible, or delegates to its tree children; ties prefer closing
    (coarser covers), which makes the optimal cover deterministic.
    Monotone in delta: a larger cap can only lower the value.
    """
    if box is None:
        box = Box((0.0,) * region.dim, 1.0)
    if delta <= 0:
        raise ValueError("delta must be positive (use math.inf for the content)")
    if region.is_empty:
        return ContentResult(0.0, Region(region.dim), delta)
    if region.max_level() > max_level:
        raise ValueError("region cubes must sit at level <= max_level")

    tree = spanning_tree(region)
    leaves = region.cubes

    cost: dict = {}
    cover: dict = {}

    def solve(node: DyadicCube):
        r = node.radius(box)
        take_cost = gauge(r) if r <= delta else math.inf
        if node in leaves:
            if take_cost < math.inf:
                cost[node] = take_cost
                cover[node] = [node]
            else:
                # the cap forbids this cube; cover it by uniform descent
                c, lvl = _descent_cost(node.level, region.dim, box, gauge, delta, max_level)
                cost[node] = c
                cover[node] = _expand_full(node, lvl)
            return
        child_cost = sum(cost[ch] for ch in tree[node])
        if take_cost <= child_cost:
            cost[node] = take_cost
            cover[node] = [node]
        else:
            cost[node] = child_cost
            cover[node] = [q for ch in tree[node] for q in cover[ch]]

    for node in sorted(tree, key=lambda q: -q.level):
        solve(node)

    root = tree_root(region.dim)
    return ContentResult(float(cost[root]), Region(region.dim, cover[root]), delta)


def exhaustive_content(region: Region, gauge: Gauge, delta: float, max_level: int, box: Box | None = None,
                       node_limit: int = 24) -> float:
    """Independent oracle: enumerate every antichain cut of the spanning tree
    and take the cheapest admissible one.  Exponential; small trees only."""
    if box is None:
        box = Box((0.0,) * region.dim, 1.0)
    if region.is_empty:
        return 0.0
    tree = spanning_tree(region)
    if len(tree) > node_limit:
        raise ValueError(f"tree has {len(tree)} nodes; oracle limited to {node_limit}")
    leaves = region.cubes

    def covers(node: DyadicCube):
        r = node.radius(box)
        own = [[node]] if r <= delta else []
        if node in leaves:
            if not own:
                _, lvl = _descent_cost(node.level, region.dim, box, gauge, delta, max_level)
                return [_expand_full(node, lvl)]
            return own
        parts = [covers(ch) for ch in tree[node]]
        combined = [[]]
        for p in parts:
            combined = [acc + choice for acc in combined for choice in p]
        return own + combined

    best = math.inf
    for cov in covers(tree_root(region.dim)):
        price = sum(gauge(q.radius(box)) for q in cov)
        best = min(best, price)
    return float(best)


# -- density ------------------------------------------------------------------

def _group_masses(indices: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """Sums of `masses` grouped by rows of `indices`."""
    if indices.shape[0] == 0:
        return np.zeros(0)
    _, inverse = np.unique(indices, axis=0, return_inverse=True)
    return np.bincount(inverse, weights=masses)


def density_levels(measure, gauge: Gauge, levels, delta: float = math.inf,
                   shifted_grids: bool = False) -> list:
    """Per-level maxima of mu(Q)/h(r_Q) over level cubes with r_Q <= delta.

    With `shifted_grids`, each level also scans the 2^N half-shifted cube
    grids, which dampens artifacts from atoms hugging dyadic boundaries.
    The list of (level, max) pairs is the auditable stand-in for the
    delta -> 0 density limit.
    """
    if isinstance(measure, WeightedRestriction):
        box = measure.base.box
        positions = measure.base.positions
        masses = measure.atom_masses()
    else:
        box = measure.box
        positions = measure.positions
        masses = measure.masses
    keep = masses > 0
    positions, masses = positions[keep], masses[keep]
    out = []
    for level in levels:
        r = box.cube_radius(level)
        if r > delta:
            continue
        h = gauge(r)
        if h <= 0:
            raise ValueError(f"degenerate gauge: h(r)=0 at level {level}")
        if masses.size == 0:
            out.append((level, 0.0))
            continue
        rel = (positions - np.asarray(box.origin)) / box.spacing(level)
        best = 0.0
        shifts = range(2**box.dim) if shifted_grids else (0,)
        for bits in shifts:
            shift = np.array([0.5 * ((bits >> k) & 1) for k in range(box.dim)])
            idx = np.floor(rel - shift).astype(np.int64)
            best = max(best, float(_group_masses(idx, masses).max()))
        out.append((level, best / h))
    return out


def density_sup(measure, gauge: Gauge, delta: float, levels, shifted_grids: bool = False) -> float:
    """max over the admissible levels of the per-level density maxima."""
    table = density_levels(measure, gauge, levels, delta, shifted_grids)
    if not table:
        return 0.0
    return max(v for _, v in table)


# -- concentration profiles ---------------------------------------------------

@dataclass(frozen=True)
class ConcentrationProfile:
    """Maximal mass capturable within a content budget.

    entries[(budget, v)] with v nondecreasing, v(0) = 0.  `exact` marks
    enumerated values; otherwise v is the upper concave (Lagrangian)
    envelope, an upper bound matching the truth at its vertices.
    """

    entries: tuple
    vertices: tuple
    delta_cap: float
    exact: bool
    total_mass: float

    def value(self, budget: float) -> float:
        return _profile_value(self.vertices, budget, self.exact, self.total_mass)

    def eta_for(self, epsilon: float) -> float:
        """Largest budget eta with v(eta) <= epsilon (the Lemma-3.4 modulus:
        content below eta forces captured mass below epsilon)."""
        if self.exact:
            feasible = [0.0] + [c for c, m in self.vertices if m <= epsilon]
            return max(feasible)
        # concave piecewise-linear inverse
        best = 0.0
        pts = [(0.0, 0.0)] + list(self.vertices)
        for (c0, m0), (c1, m1) in zip(pts, pts[1:]):
            if m1 <= epsilon:
                best = max(best, c1)
            elif m0 <= epsilon < m1:
                best = max(best, c0 + (epsilon - m0) * (c1 - c0) / (m1 - m0))
        return best


def _profile_value(vertices, budget, exact, total_mass):
    if budget < 0:
        raise ValueError("budgets must be nonnegative")
    best = 0.0
    if exact:
        for c, m in vertices:
            if c <= budget:
                best = max(best, m)
        return best
    pts = [(0.0, 0.0)] + list(vertices)
    if budget >= pts[-1][0]:
        return pts[-1][1]
    for (c0, m0), (c1, m1) in zip(pts, pts[1:]):
        if c0 <= budget <= c1:
            if c1 == c0:
                return max(m0, m1)
            return m0 + (budget - c0) * (m1 - m0) / (c1 - c0)
    return best


def _prune_concave(points: list) -> list:
    """Upper concave frontier of (cost, mass) points, cost-sorted."""
    by_cost: dict = {}
    for c, m in points:
        if c not in by_cost or m > by_cost[c]:
            by_cost[c] = m
    frontier = []
    best_mass = -math.inf
    for c, m in sorted(by_cost.items()):
        if m > best_mass + 1e-18:
            frontier.append((c, m))
            best_mass = m
    # drop points under the chord of their neighbors (slopes must decrease)
    hull = []
    for p in frontier:
        while len(hull) >= 2:
            (c0, m0), (c1, m1) = hull[-2], hull[-1]
            c2, m2 = p
            if (m1 - m0) * (c2 - c1) <= (m2 - m1) * (c1 - c0):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def _minkowski_sum(a: list, b: list) -> list:
    return _prune_concave([(ca + cb, ma + mb) for ca, ma in a for cb, mb in b])


def concentration_profile(measure: AtomicMeasure, gauge: Gauge, delta: float, budgets,
                          max_level: int, exact_node_limit: int = 20) -> ConcentrationProfile:
    """v(b) = max mass of mu over antichains of admissible cubes priced <= b.

    Exact antichain enumeration when the spanning tree of the occupied
    level-`max_level` leaves has at most `exact_node_limit` nodes; larger
    instances get the Lagrangian concave envelope (flagged).
    """
    budgets = [float(b) for b in budgets]
    if any(b < 0 for b in budgets):
        raise ValueError("budgets must be nonnegative")
    box = measure.box
    if measure.n_atoms == 0:
        entries = tuple((b, 0.0) for b in budgets)
        return ConcentrationProfile(entries, (), delta, True, 0.0)

    leaf_idx = measure.leaf_indices(max_level)
    leaves = {DyadicCube(max_level, tuple(row)) for row in leaf_idx}
    region = Region(box.dim, leaves)
    tree = spanning_tree(region)

    cube_mass = {}
    for node in tree:
        shift = max_level - node.level
        hit = np.all(leaf_idx >> shift == np.asarray(node.index), axis=1)
        cube_mass[node] = float(measure.masses[hit].sum())

    exact = len(tree) <= exact_node_limit

    def admissible(node):
        return node.radius(box) <= delta

    if exact:
        # enumerate antichains bottom-up: per node, the Pareto set of
        # (price, captured mass) over antichains inside its subtree
        pareto: dict = {}
        for node in sorted(tree, key=lambda q: -q.level):
            choices = [(0.0, 0.0)]
            if tree[node]:
                combined = [(0.0, 0.0)]
                for ch in tree[node]:
                    combined = [(c0 + c1, m0 + m1) for c0, m0 in combined for c1, m1 in pareto[ch]]
                choices.extend(combined)
            if admissible(node):
                choices.append((gauge(node.radius(box)), cube_mass[node]))
            seen = sorted(set(choices))
            kept, best = [], -math.inf
            for c, m in seen:
                if m > best + 1e-18:
                    kept.append((c, m))
                    best = m
            pareto[node] = kept
        vertices = tuple(pareto[tree_root(box.dim)])
    else:
        # Lagrangian: per node the concave frontier of (price, mass)
        # achievable by subtree antichains; sums are Minkowski sums
        frontier: dict = {}
        for node in sorted(tree, key=lambda q: -q.level):
            pts = [(0.0, 0.0)]
            if tree[node]:
                acc = [(0.0, 0.0)]
                for ch in tree[node]:
                    acc = _minkowski_sum(acc, frontier[ch])
                pts = _prune_concave(pts + acc)
            if admissible(node):
                pts = _prune_concave(pts + [(gauge(node.radius(box)), cube_mass[node])])
            frontier[node] = pts
        vertices = tuple(frontier[tree_root(box.dim)])

    total = measure.total_mass
    entries = tuple((b, _profile_value(vertices, b, exact, total)) for b in budgets)
    return ConcentrationProfile(entries, vertices, delta, exact, total)
