"""Shared generators and independent oracles for the test suite."""

import math

import numpy as np
import pytest

from gmtkit.dyadic import Box, DyadicCube, Region, spanning_tree
from gmtkit.measures import AtomicMeasure


def random_region(rng, dim=None, max_level=4, max_cubes=4, node_limit=20) -> Region:
    """Random small region whose spanning tree stays under `node_limit`."""
    for _ in range(50):
        d = dim if dim is not None else int(rng.integers(1, 3))
        cubes = []
        for _ in range(int(rng.integers(1, max_cubes + 1))):
            level = int(rng.integers(0, max_level + 1))
            idx = tuple(int(rng.integers(0, 2**level)) for _ in range(d))
            cubes.append(DyadicCube(level, idx))
        region = Region(d, cubes)
        if len(spanning_tree(region)) <= node_limit:
            return region
    raise RuntimeError("could not draw a small region")


def random_measure(rng, box=None, dim=2, n_atoms=8, total=None) -> AtomicMeasure:
    if box is None:
        box = Box((0.0,) * dim, 1.0)
    pos = np.asarray(box.origin) + box.side * rng.random((n_atoms, box.dim)) * 0.999
    masses = rng.uniform(0.1, 1.0, size=n_atoms)
    if total is not None:
        masses *= total / masses.sum()
    return AtomicMeasure(box, pos, masses)


def lp_max_restriction_mass(measure, gauge, c, delta, max_level) -> float:
    """Independent LP oracle for the density-capped maximal restriction."""
    from scipy.optimize import linprog

    if c <= 0:
        return 0.0
    n = measure.n_atoms
    box = measure.box
    rows, rhs = [], []
    for level in range(0, max_level + 1):
        r = box.cube_radius(level)
        if r > delta:
            continue
        idx = measure.leaf_indices(level)
        _, inverse = np.unique(idx, axis=0, return_inverse=True)
        for g in range(inverse.max() + 1):
            row = np.zeros(n)
            row[inverse == g] = 1.0
            rows.append(row)
            rhs.append(c * gauge(r))
    if not rows:
        return measure.total_mass
    res = linprog(
        c=-np.ones(n),
        A_ub=np.vstack(rows),
        b_ub=np.array(rhs),
        bounds=[(0.0, float(m)) for m in measure.masses],
        method="highs",
    )
    assert res.success
    return float(-res.fun)


def brute_profile_value(measure, gauge, delta, budget, max_level) -> float:
    """Exhaustive antichain-knapsack oracle (subset enumeration over the
    spanning tree; instances must stay tiny)."""
    box = measure.box
    leaf_idx = measure.leaf_indices(max_level)
    leaves = {DyadicCube(max_level, tuple(r)) for r in leaf_idx}
    nodes = sorted(spanning_tree(Region(box.dim, leaves)))
    assert len(nodes) <= 14, "oracle instance too large"

    def mass_of(cube):
        shift = max_level - cube.level
        hit = np.all(leaf_idx >> shift == np.asarray(cube.index), axis=1)
        return float(measure.masses[hit].sum())

    best = 0.0
    for bits in range(2 ** len(nodes)):
        chosen = [nodes[i] for i in range(len(nodes)) if bits >> i & 1]
        if any(a.contains(b) for a in chosen for b in chosen if a != b):
            continue
        if any(q.radius(box) > delta for q in chosen):
            continue
        price = sum(gauge(q.radius(box)) for q in chosen)
        if price <= budget + 1e-12:
            best = max(best, sum(mass_of(q) for q in chosen))
    return best


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
