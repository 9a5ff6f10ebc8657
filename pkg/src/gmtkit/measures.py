"""Atomic measures, signed measures, and fractional restrictions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import Box, DyadicCube, leaf_index


class PlacementError(ValueError):
    """Atom position outside (or on the closed upper boundary of) the root box."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AtomicMeasure:
    """Finite nonnegative measure given by weighted point atoms in a root box.

    Positions live in the half-open box [origin, origin + side)^N so that
    every atom has a unique dyadic leaf at every level.  Positions within
    1e-12 * side below the origin are snapped onto it; anything further out,
    or on/past the upper boundary, is a PlacementError.
    """

    box: Box
    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.array(self.positions, dtype=float))
        if pos.size == 0:
            pos = pos.reshape(0, self.box.dim)
        mas = np.atleast_1d(np.array(self.masses, dtype=float))
        if pos.shape[0] != mas.shape[0]:
            raise ValueError("positions and masses disagree in length")
        if pos.shape[1] != self.box.dim:
            raise ValueError(f"positions are {pos.shape[1]}-dimensional, box is {self.box.dim}-dimensional")
        if np.any(mas <= 0):
            raise ValueError("atom masses must be positive")
        lo = np.asarray(self.box.origin)
        hi = lo + self.box.side
        tol = 1e-12 * self.box.side
        under = (pos < lo) & (pos >= lo - tol)
        pos[under] = np.broadcast_to(lo, pos.shape)[under]
        if np.any(pos < lo) or np.any(pos >= hi):
            raise PlacementError("atom position outside the half-open root box")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "masses", _frozen(mas))

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def n_atoms(self) -> int:
        return int(self.masses.shape[0])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def leaf_of(self, atom: int, level: int) -> DyadicCube:
        """The unique level-`level` cube containing the atom."""
        return DyadicCube(level, leaf_index(self.box, self.positions[atom], level))

    def leaf_indices(self, level: int) -> np.ndarray:
        """(n_atoms, dim) integer array of leaf indices at `level`."""
        rel = (self.positions - np.asarray(self.box.origin)) / self.box.side
        idx = np.floor(rel * 2**level).astype(np.int64)
        return np.minimum(idx, 2**level - 1)

    def cube_mass(self, cube: DyadicCube) -> float:
        idx = self.leaf_indices(cube.level)
        hit = np.all(idx == np.asarray(cube.index), axis=1)
        return float(self.masses[hit].sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AtomicMeasure)
            and self.box == other.box
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.masses, other.masses)
        )


def empty_measure(box: Box) -> AtomicMeasure:
    m = object.__new__(AtomicMeasure)
    object.__setattr__(m, "box", box)
    object.__setattr__(m, "positions", _frozen(np.zeros((0, box.dim))))
    object.__setattr__(m, "masses", _frozen(np.zeros(0)))
    return m


@dataclass(frozen=True)
class SignedAtomicMeasure:
    """Signed measure with an explicit Hahn split into positive/negative parts."""

    positive: AtomicMeasure
    negative: AtomicMeasure

    def __post_init__(self):
        if self.positive.box != self.negative.box:
            raise ValueError("positive and negative parts must share the root box")
        if self.positive.n_atoms and self.negative.n_atoms:
            pos = {tuple(x) for x in self.positive.positions}
            neg = {tuple(x) for x in self.negative.positions}
            if pos & neg:
                raise ValueError("a position occurs in both the positive and negative part")

    @property
    def box(self) -> Box:
        return self.positive.box

    @property
    def dim(self) -> int:
        return self.positive.dim

    @property
    def total_variation(self) -> float:
        return self.positive.total_mass + self.negative.total_mass

    @property
    def net_mass(self) -> float:
        return self.positive.total_mass - self.negative.total_mass

    def parts(self):
        """(positions, signed masses) concatenated over both parts."""
        pos = np.vstack([self.positive.positions, self.negative.positions])
        mas = np.concatenate([self.positive.masses, -self.negative.masses])
        return pos, mas


def as_signed(measure) -> SignedAtomicMeasure:
    if isinstance(measure, SignedAtomicMeasure):
        return measure
    return SignedAtomicMeasure(positive=measure, negative=empty_measure(measure.box))


@dataclass(frozen=True)
class WeightedRestriction:
    """Fractional restriction of a base measure: per-atom weights in [0, 1].

    Stands in for the set restriction mu|_E; the induced measure is
    atom-wise dominated by the base, so nu(A) <= mu(A) for every region A.
    """

    base: AtomicMeasure
    weights: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.array(self.weights, dtype=float))
        if w.shape[0] != self.base.n_atoms:
            raise ValueError("one weight per atom required")
        if np.any(w < -1e-15) or np.any(w > 1 + 1e-12):
            raise ValueError("weights must lie in [0, 1]")
        object.__setattr__(self, "weights", _frozen(np.clip(w, 0.0, 1.0)))

    @property
    def mass(self) -> float:
        return float((self.weights * self.base.masses).sum())

    def atom_masses(self) -> np.ndarray:
        return self.weights * self.base.masses

    def materialize(self) -> AtomicMeasure:
        """Drop zero-weight atoms and return a plain measure."""
        keep = self.weights > 0
        if not np.any(keep):
            return empty_measure(self.base.box)
        return AtomicMeasure(self.base.box, self.base.positions[keep], self.atom_masses()[keep])

    def cube_mass(self, cube: DyadicCube) -> float:
        idx = self.base.leaf_indices(cube.level)
        hit = np.all(idx == np.asarray(cube.index), axis=1)
        return float(self.atom_masses()[hit].sum())


def full_restriction(measure: AtomicMeasure) -> WeightedRestriction:
    return WeightedRestriction(measure, np.ones(measure.n_atoms))


def zero_restriction(measure: AtomicMeasure) -> WeightedRestriction:
    return WeightedRestriction(measure, np.zeros(measure.n_atoms))


def tv_distance(measure: AtomicMeasure, restriction: WeightedRestriction) -> float:
    """Total-variation distance ||mu - nu|| for a restriction nu of mu,
    i.e. the removed mass sum (1 - w_a) m_a."""
    if restriction.base is not measure and restriction.base != measure:
        raise ValueError("restriction does not restrict this measure")
    return float(((1.0 - restriction.weights) * measure.masses).sum())
