"""Dyadic cubes, root boxes, and antichain regions.

All geometry hangs off a root ``Box`` with side S.  A level-l cube has
side S * 2^-l and is priced by the radius of the smallest enclosing
ball centered at its center, r = S * sqrt(N) * 2^-(l+1).  Cubes follow
the half-open convention, so every point of the box belongs to exactly
one cube per level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np


@dataclass(frozen=True)
class Box:
    origin: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "side", float(self.side))
        if self.side <= 0:
            raise ValueError(f"box side must be positive, got {self.side}")

    @property
    def dim(self) -> int:
        return len(self.origin)

    def spacing(self, level: int) -> float:
        return self.side * 2.0**-level

    def cube_radius(self, level: int) -> float:
        """Radius of the ball circumscribing a level-`level` cube."""
        return self.side * math.sqrt(self.dim) * 2.0 ** -(level + 1)


@dataclass(frozen=True, order=True)
class DyadicCube:
    level: int
    index: tuple

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(int(i) for i in self.index))
        if self.level < 0:
            raise ValueError("cube level must be >= 0")
        if any(i < 0 or i >= 2**self.level for i in self.index):
            raise ValueError(f"cube index {self.index} out of range at level {self.level}")

    @property
    def dim(self) -> int:
        return len(self.index)

    def parent(self) -> "DyadicCube":
        if self.level == 0:
            raise ValueError("root cube has no parent")
        return DyadicCube(self.level - 1, tuple(i >> 1 for i in self.index))

    def ancestor(self, level: int) -> "DyadicCube":
        if level > self.level:
            raise ValueError("ancestor level must not exceed cube level")
        shift = self.level - level
        return DyadicCube(level, tuple(i >> shift for i in self.index))

    def children(self) -> list:
        out = []
        for bits in range(2**self.dim):
            child = tuple(2 * self.index[k] + ((bits >> k) & 1) for k in range(self.dim))
            out.append(DyadicCube(self.level + 1, child))
        return out

    def contains(self, other: "DyadicCube") -> bool:
        """True when `other` is a descendant of (or equals) this cube."""
        if other.level < self.level:
            return False
        return other.ancestor(self.level) == self

    def side(self, box: Box) -> float:
        return box.spacing(self.level)

    def radius(self, box: Box) -> float:
        return box.cube_radius(self.level)

    def low(self, box: Box) -> np.ndarray:
        s = self.side(box)
        return np.asarray(box.origin) + s * np.asarray(self.index, dtype=float)

    def center(self, box: Box) -> np.ndarray:
        s = self.side(box)
        return np.asarray(box.origin) + s * (np.asarray(self.index, dtype=float) + 0.5)


def leaf_index(box: Box, point, level: int) -> tuple:
    """Index of the half-open level-`level` cube containing `point`."""
    x = np.asarray(point, dtype=float)
    rel = (x - np.asarray(box.origin)) / box.side
    if np.any(rel < 0.0) or np.any(rel >= 1.0):
        raise ValueError(f"point {tuple(x)} outside the half-open root box")
    idx = np.floor(rel * 2**level).astype(int)
    # guard against floating roundoff pushing an interior point onto 2^level
    idx = np.minimum(idx, 2**level - 1)
    return tuple(int(i) for i in idx)


class Region:
    """Finite union of dyadic cubes, stored as an antichain.

    Construction drops every cube that lies inside another, so no cube
    of a region ever contains a second one; all set operations
    re-canonicalize.
    """

    def __init__(self, dim: int, cubes: Iterable[DyadicCube] = ()):
        self.dim = int(dim)
        all_cubes = sorted(set(cubes))  # sorts coarse levels first
        for q in all_cubes:
            if len(q.index) != self.dim:
                raise ValueError(f"cube {q} has dimension {len(q.index)}, region has {self.dim}")
        chosen = set()
        levels_present = sorted({q.level for q in all_cubes})
        for q in all_cubes:
            dominated = False
            for l in levels_present:
                if l >= q.level:
                    break
                if q.ancestor(l) in chosen:
                    dominated = True
                    break
            if not dominated:
                chosen.add(q)
        self.cubes = frozenset(chosen)

    def __len__(self) -> int:
        return len(self.cubes)

    def __iter__(self) -> Iterator[DyadicCube]:
        return iter(sorted(self.cubes))

    def __eq__(self, other) -> bool:
        return isinstance(other, Region) and self.dim == other.dim and self.cubes == other.cubes

    def __hash__(self):
        return hash((self.dim, self.cubes))

    def __repr__(self):
        return f"Region(dim={self.dim}, cubes={len(self.cubes)})"

    @property
    def is_empty(self) -> bool:
        return not self.cubes

    def max_level(self) -> int:
        if self.is_empty:
            return 0
        return max(q.level for q in self.cubes)

    def union(self, other: "Region") -> "Region":
        if self.dim != other.dim:
            raise ValueError("regions live in different dimensions")
        return Region(self.dim, list(self.cubes) + list(other.cubes))

    def without(self, cubes: Iterable[DyadicCube]) -> "Region":
        drop = set(cubes)
        return Region(self.dim, [q for q in self.cubes if q not in drop])

    def refine_to(self, level: int) -> list:
        """All level-`level` descendants of the region's cubes (each cube of
        the antichain must sit at level <= `level`)."""
        leaves = []
        for q in self.cubes:
            if q.level > level:
                raise ValueError(f"cube at level {q.level} cannot refine to coarser level {level}")
            gap = level - q.level
            base = np.asarray(q.index, dtype=np.int64) << gap
            grids = np.indices((2**gap,) * self.dim).reshape(self.dim, -1).T
            for off in grids:
                leaves.append(DyadicCube(level, tuple(base + off)))
        return leaves

    def contains_cube(self, cube: DyadicCube) -> bool:
        for q in self.cubes:
            if q.contains(cube):
                return True
        return False


def spanning_tree(region: Region) -> dict:
    """Tree spanned by a region: every ancestor of every cube, keyed by
    cube with the list of tree children as value.  Leaves (the region's
    own cubes) map to empty lists.  The root is the level-0 cube."""
    children: dict = {q: [] for q in region.cubes}
    frontier = sorted(region.cubes, key=lambda q: -q.level)
    seen = set(children)
    for q in frontier:
        node = q
        while node.level > 0:
            par = node.parent()
            if par in seen:
                children.setdefault(par, []).append(node)
                break
            children[par] = [node]
            seen.add(par)
            node = par
    for v in children.values():
        v.sort()
    return children


def tree_root(dim: int) -> DyadicCube:
    return DyadicCube(0, (0,) * dim)
