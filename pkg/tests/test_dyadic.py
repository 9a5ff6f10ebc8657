"""Dyadic geometry: cubes, leaf assignment, antichain regions."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gmtkit.dyadic import Box, DyadicCube, Region, leaf_index, spanning_tree, tree_root
from gmtkit.measures import AtomicMeasure, PlacementError


def test_leaf_examples():
    box = Box((0.0,), 1.0)
    assert leaf_index(box, [0.3], 2) == (1,)          # [0.25, 0.5)
    assert leaf_index(box, [0.0], 2) == (0,)          # half-open convention
    assert leaf_index(box, [0.0], 7) == (0,)
    box2 = Box((0.0, 0.0), 1.0)
    assert leaf_index(box2, [0.6, 0.1], 1) == (1, 0)


def test_leaf_out_of_box():
    box = Box((0.0,), 1.0)
    with pytest.raises(ValueError):
        leaf_index(box, [1.0], 3)  # on the closed upper boundary
    with pytest.raises(ValueError):
        leaf_index(box, [-0.01], 3)


def test_atom_placement_errors():
    box = Box((0.0, 0.0), 1.0)
    with pytest.raises(PlacementError):
        AtomicMeasure(box, [[1.0, 0.5]], [1.0])
    with pytest.raises(PlacementError):
        AtomicMeasure(box, [[0.5, -0.2]], [1.0])
    # within snapping tolerance below the origin is repaired
    mu = AtomicMeasure(box, [[-1e-14, 0.5]], [1.0])
    assert mu.positions[0, 0] == 0.0


def test_cube_geometry():
    box = Box((0.0, 0.0), 1.0)
    q = DyadicCube(2, (1, 3))
    assert q.side(box) == 0.25
    assert q.radius(box) == pytest.approx(0.25 * math.sqrt(2) / 2)
    assert np.allclose(q.center(box), [0.375, 0.875])
    kids = q.children()
    assert len(kids) == 4
    assert all(k.parent() == q for k in kids)
    # children radii halve and children partition the parent
    assert kids[0].radius(box) == pytest.approx(q.radius(box) / 2)


def test_cube_contained_in_circumscribed_ball():
    box = Box((0.0, 0.0, 0.0), 2.0)
    q = DyadicCube(3, (1, 5, 2))
    corners = []
    lo = q.low(box)
    s = q.side(box)
    for bits in range(8):
        corners.append(lo + s * np.array([(bits >> k) & 1 for k in range(3)]))
    c = q.center(box)
    assert all(np.linalg.norm(x - c) <= q.radius(box) + 1e-12 for x in corners)


@given(st.integers(min_value=0, max_value=6), st.integers(min_value=0, max_value=63))
def test_children_partition_masses(level, raw):
    """Leaf masses of the 2^N children sum to the parent's mass."""
    box = Box((0.0,), 1.0)
    rng = np.random.default_rng(raw)
    mu = AtomicMeasure(box, rng.random((16, 1)), rng.uniform(0.1, 1, 16))
    q = DyadicCube(level, (raw % 2**level,) if level else (0,))
    parent_mass = mu.cube_mass(q)
    child_sum = sum(mu.cube_mass(c) for c in q.children())
    assert child_sum == pytest.approx(parent_mass, abs=1e-12)


def test_region_antichain_canonicalization():
    parent = DyadicCube(1, (0,))
    child = DyadicCube(2, (1,))
    deep = DyadicCube(3, (2,))  # inside child, inside parent
    region = Region(1, [child, parent, deep])
    assert region.cubes == frozenset([parent])
    other = Region(1, [DyadicCube(1, (1,))])
    union = region.union(other)
    assert len(union) == 2


def test_region_rejects_dim_mismatch():
    with pytest.raises(ValueError):
        Region(2, [DyadicCube(1, (0,))])


def test_spanning_tree_structure():
    region = Region(2, [DyadicCube(2, (0, 0)), DyadicCube(2, (3, 3)), DyadicCube(1, (0, 1))])
    tree = spanning_tree(region)
    root = tree_root(2)
    assert root in tree
    # leaves have no children; internal nodes chain to the leaves
    for leaf in region.cubes:
        assert tree[leaf] == []
    reachable = set()
    stack = [root]
    while stack:
        node = stack.pop()
        reachable.add(node)
        stack.extend(tree[node])
    assert region.cubes <= reachable


def test_refine_to():
    region = Region(2, [DyadicCube(1, (1, 0))])
    leaves = region.refine_to(3)
    assert len(leaves) == 16
    assert all(leaf.ancestor(1) == DyadicCube(1, (1, 0)) for leaf in leaves)
