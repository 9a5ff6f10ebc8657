"""Greedy Hahn-type decomposition, density-capped restrictions, and the
series decomposition of a measure into density-certified pieces.

The fractional restriction nu <= mu under the cube caps nu(Q) <= c h(r_Q)
is a flow problem on a laminar family: bottom-up proportional capping is
exact (each cube's constraint is met by scaling everything below it, and
coarser caps only ever scale further down).  The greedy Hahn loop removes
near-maximal violating sets against an outer-measure oracle until the
remainder is dominated, mirroring the exhaustion argument that proves the
decomposition exists.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .content import density_sup, dyadic_content
from .dyadic import Box, DyadicCube, Region
from .gauges import Gauge
from .measures import AtomicMeasure, WeightedRestriction, tv_distance, zero_restriction


class OracleContractError(ValueError):
    """Outer-measure oracle failed a monotonicity/subadditivity spot check."""


class IncompleteDecompositionError(RuntimeError):
    def __init__(self, remainder_mass: float):
        super().__init__(f"schedule exhausted with remainder mass {remainder_mass}")
        self.remainder_mass = remainder_mass


class SeparationError(ValueError):
    """Trimming would exceed the per-piece mass allowance."""


# -- outer-measure oracles ----------------------------------------------------

class OuterMeasureOracle:
    """Set function T on atom-index subsets with T(empty) = 0, monotone,
    finitely subadditive.  All three are spot-checked on random subset
    triples at construction (seeded, deterministic)."""

    def __init__(self, fn, n_atoms: int, name: str, params: dict | None = None,
                 check_samples: int = 40, seed: int = 0):
        self._fn = fn
        self.n_atoms = int(n_atoms)
        self.name = name
        self.params = dict(params or {})
        self._cache: dict = {}
        self._spot_check(check_samples, seed)

    def __call__(self, subset) -> float:
        key = frozenset(int(i) for i in subset)
        if key not in self._cache:
            val = float(self._fn(key))
            if val < 0:
                raise OracleContractError(f"{self.name}: negative value on {sorted(key)}")
            self._cache[key] = val
        return self._cache[key]

    def _spot_check(self, samples: int, seed: int) -> None:
        if self(frozenset()) != 0.0:
            raise OracleContractError(f"{self.name}: T(empty) != 0")
        if self.n_atoms == 0:
            return
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            a = frozenset(np.flatnonzero(rng.random(self.n_atoms) < 0.4).tolist())
            b = frozenset(np.flatnonzero(rng.random(self.n_atoms) < 0.4).tolist())
            if self(a | b) > self(a) + self(b) + 1e-9 * (1 + self(a) + self(b)):
                raise OracleContractError(f"{self.name}: subadditivity fails on a sample pair")
            if self(a) > self(a | b) + 1e-12:
                raise OracleContractError(f"{self.name}: monotonicity fails on a sample pair")

    def describe(self) -> dict:
        return {"name": self.name, "params": self.params}


def zero_oracle(n_atoms: int) -> OuterMeasureOracle:
    return OuterMeasureOracle(lambda s: 0.0, n_atoms, "zero")


def counting_oracle(kappa: float, n_atoms: int) -> OuterMeasureOracle:
    return OuterMeasureOracle(lambda s: kappa * len(s), n_atoms, "counting", {"kappa": kappa})


def content_cap_oracle(measure: AtomicMeasure, gauge: Gauge, c: float, delta: float,
                       max_level: int) -> OuterMeasureOracle:
    """T(F) = c * dyadic content of the level-`max_level` leaves of F."""
    leaf_idx = measure.leaf_indices(max_level)

    def fn(subset):
        if not subset:
            return 0.0
        cubes = [DyadicCube(max_level, tuple(leaf_idx[i])) for i in subset]
        res = dyadic_content(Region(measure.dim, cubes), gauge, delta, max_level, box=measure.box)
        return c * res.value

    return OuterMeasureOracle(fn, measure.n_atoms, "content-cap", {"c": c, "delta": delta, "level": max_level})


def oracle_from_spec(spec: str, measure: AtomicMeasure, gauge: Gauge | None,
                     max_level: int) -> OuterMeasureOracle:
    """Parse the CLI oracle strings: 'zero' | 'counting:kappa' | 'content-cap:c,delta'."""
    head, _, args = spec.partition(":")
    if head == "zero":
        return zero_oracle(measure.n_atoms)
    if head == "counting":
        return counting_oracle(float(args), measure.n_atoms)
    if head == "content-cap":
        if gauge is None:
            raise ValueError("content-cap oracle needs a gauge")
        c_str, delta_str = args.split(",")
        delta = math.inf if delta_str in ("inf", "") else float(delta_str)
        return content_cap_oracle(measure, gauge, float(c_str), delta, max_level)
    raise ValueError(f"unknown oracle spec {spec!r}")


# -- density-capped maximal restriction ---------------------------------------

def _cap_fractions(positions: np.ndarray, masses: np.ndarray, box: Box, gauge: Gauge,
                   c: float, delta: float, max_level: int) -> np.ndarray:
    """Per-atom keep fraction of the maximal sub-measure obeying
    nu(Q) <= c h(r_Q) on every cube of level <= max_level with r_Q <= delta."""
    n = masses.shape[0]
    if c <= 0 or n == 0:
        return np.zeros(n)
    w = np.ones(n)
    rel = (positions - np.asarray(box.origin)) / box.side
    for level in range(max_level, -1, -1):
        r = box.cube_radius(level)
        if r > delta:
            break  # radii only grow toward the root
        cap = c * gauge(r)
        idx = np.minimum(np.floor(rel * 2**level).astype(np.int64), 2**level - 1)
        _, inverse = np.unique(idx, axis=0, return_inverse=True)
        sums = np.bincount(inverse, weights=w * masses)
        factors = np.ones_like(sums)
        over = sums > cap
        factors[over] = cap / sums[over]
        w *= factors[inverse]
    return w


def max_restriction(measure: AtomicMeasure, gauge: Gauge, c: float, delta: float,
                    max_level: int) -> WeightedRestriction:
    """Maximal-mass fractional restriction under the (c, delta) cube caps.

    Exact by max-flow/min-cut duality on the laminar cube family; c <= 0
    returns the zero restriction.
    """
    if measure.box.cube_radius(max_level) > delta:
        raise ValueError("delta below the leaf radius: no level is admissible")
    w = _cap_fractions(measure.positions, measure.masses, measure.box, gauge, c, delta, max_level)
    return WeightedRestriction(measure, w)


def calibrate_restriction(measure: AtomicMeasure, gauge: Gauge, eps: float, delta: float,
                          max_level: int, bisections: int = 10):
    """Smallest cap multiplier (on a factor-2 sweep refined by bisection)
    whose maximal restriction removes at most eps of the mass.

    Returns (c, restriction).  Removed mass is nonincreasing in c, so the
    sweep brackets and bisection converges; results are reproducible
    bit-for-bit because the sweep grid is fixed.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    total = measure.total_mass
    if eps >= total:
        return 0.0, zero_restriction(measure)

    def removed(c):
        return tv_distance(measure, max_restriction(measure, gauge, c, delta, max_level))

    c = _sweep_smallest_c(removed, eps, bisections)
    return c, max_restriction(measure, gauge, c, delta, max_level)


def _sweep_smallest_c(removed, eps: float, bisections: int) -> float:
    """Factor-2 sweep from c = 1 bracketing the smallest passing cap,
    then `bisections` bisection steps; returns the passing endpoint."""
    c_hi = 1.0
    if removed(c_hi) <= eps:
        while c_hi / 2.0 >= 1e-30 and removed(c_hi / 2.0) <= eps:
            c_hi /= 2.0
    else:
        while removed(c_hi) > eps:
            c_hi *= 2.0
            if c_hi > 1e30:
                raise RuntimeError("calibration sweep failed to bracket")
    c_lo = c_hi / 2.0
    for _ in range(bisections):
        mid = 0.5 * (c_lo + c_hi)
        if removed(mid) <= eps:
            c_hi = mid
        else:
            c_lo = mid
    return c_hi


# -- greedy Hahn decomposition -------------------------------------------------

@dataclass(frozen=True)
class HahnPiece:
    atoms: tuple
    oracle_value: float
    mass: float


@dataclass(frozen=True)
class HahnResult:
    kept: tuple                    # atom indices of E
    pieces: tuple                  # removed HahnPiece records, in removal order
    theta: float
    search: str
    certified: bool
    complement_oracle_value: float
    complement_mass: float


def _exhaustive_candidates(remaining: tuple):
    for size in range(1, len(remaining) + 1):
        for comb in itertools.combinations(remaining, size):
            yield comb


def _cube_candidates(measure: AtomicMeasure, remaining: tuple, max_level: int):
    """Atom sets cut out by single dyadic cubes of level <= max_level."""
    rem = np.asarray(remaining)
    seen = set()
    for level in range(0, max_level + 1):
        idx = measure.leaf_indices(level)[rem]
        uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
        for g in range(len(uniq)):
            atoms = tuple(sorted(int(a) for a in rem[inverse == g]))
            if atoms not in seen:
                seen.add(atoms)
                yield atoms


def greedy_hahn(measure: AtomicMeasure, oracle: OuterMeasureOracle, theta: float = 0.5,
                search: str = "exhaustive", max_level: int = 4, tol: float = 1e-12) -> HahnResult:
    """Remove theta-near-maximal violating sets (T(F) <= mu(F)) until the rest
    is dominated by the oracle.

    Among violating candidates with mu(F) >= theta * eps_n the
    lexicographically smallest index set is removed, which makes runs
    deterministic.  Exhaustive search enumerates all subsets (<= 20 atoms);
    cube search restricts candidates to single-cube atom sets, and the
    domination certificate is then relative to that family.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    if search not in ("exhaustive", "cubes"):
        raise ValueError(f"unknown search mode {search!r}")
    if search == "exhaustive" and measure.n_atoms > 20:
        raise ValueError("exhaustive search supports at most 20 atoms")

    masses = measure.masses
    remaining = tuple(range(measure.n_atoms))
    pieces = []

    while remaining:
        if search == "exhaustive":
            cands = _exhaustive_candidates(remaining)
        else:
            cands = _cube_candidates(measure, remaining, max_level)
        violating = []
        for f in cands:
            mu_f = float(masses[list(f)].sum())
            if mu_f <= tol:
                continue
            t_f = oracle(f)
            if t_f <= mu_f:
                violating.append((f, t_f, mu_f))
        if not violating:
            break
        eps_n = max(mu_f for _, _, mu_f in violating)
        threshold = theta * eps_n
        near_max = [rec for rec in violating if rec[2] >= threshold]
        pick = min(near_max, key=lambda rec: rec[0])
        pieces.append(HahnPiece(pick[0], pick[1], pick[2]))
        remaining = tuple(i for i in remaining if i not in set(pick[0]))

    kept = remaining
    removed = tuple(sorted(i for p in pieces for i in p.atoms))
    comp_T = oracle(removed)
    comp_mu = float(masses[list(removed)].sum()) if removed else 0.0
    if comp_T > comp_mu + 1e-9 * (1.0 + comp_mu):
        raise OracleContractError("T(E^c) <= mu(E^c) failed; oracle breaks subadditivity")

    certified = _certify_domination(measure, oracle, kept, search, max_level, tol)
    return HahnResult(kept, tuple(pieces), theta, search, certified, comp_T, comp_mu)


def _certify_domination(measure, oracle, kept, search, max_level, tol) -> bool:
    if search == "exhaustive":
        cands = _exhaustive_candidates(kept)
    else:
        cands = _cube_candidates(measure, kept, max_level)
    for f in cands:
        mu_f = float(measure.masses[list(f)].sum())
        if mu_f > tol and oracle(f) < mu_f:
            return False
    return True


# -- separated pieces ----------------------------------------------------------

def _cube_gap(a: DyadicCube, b: DyadicCube, box: Box) -> float:
    lo_a, lo_b = a.low(box), b.low(box)
    hi_a, hi_b = lo_a + a.side(box), lo_b + b.side(box)
    gaps = np.maximum(0.0, np.maximum(lo_b - hi_a, lo_a - hi_b))
    return float(np.sqrt((gaps**2).sum()))


def _region_gap(r1: Region, r2: Region, box: Box) -> float:
    if r1.is_empty or r2.is_empty:
        return math.inf
    return min(_cube_gap(a, b, box) for a in r1 for b in r2)


def _piece_atom_mass(measure: AtomicMeasure, region: Region, cube: DyadicCube) -> float:
    idx = measure.leaf_indices(cube.level)
    hit = np.all(idx == np.asarray(cube.index), axis=1)
    return float(measure.masses[hit].sum())


def separate_pieces(pieces, measure: AtomicMeasure, eps: float, refine_levels: int = 2):
    """Trim touching pieces until all pairwise gaps are positive.

    An offending cube on the lighter side (ties: the later piece) is first
    refined into children, so only a thin boundary layer is at stake; once
    a touching cube sits `refine_levels` below the original granularity it
    is dropped outright.  Each piece may shed at most eps/n mass, else
    SeparationError.  Returns the trimmed regions and the realized
    separation radius delta_lower = (min pairwise gap) / 2; a single piece
    is unconstrained and reports the root side.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    regions = list(pieces)
    n = len(regions)
    box = measure.box
    if n <= 1:
        return regions, box.side

    # pre: pieces disjoint as atom sets
    owned = []
    for reg in regions:
        atoms = set()
        for cube in reg:
            idx = measure.leaf_indices(cube.level)
            atoms |= set(np.flatnonzero(np.all(idx == np.asarray(cube.index), axis=1)).tolist())
        owned.append(atoms)
    for i in range(n):
        for j in range(i + 1, n):
            if owned[i] & owned[j]:
                raise ValueError(f"pieces {i} and {j} share atoms")

    trim_level = max(q.level for reg in regions for q in reg) + refine_levels
    allowance = eps / n
    dropped = [0.0] * n
    while True:
        touching = None
        for i in range(n):
            for j in range(i + 1, n):
                if not regions[i].is_empty and not regions[j].is_empty \
                        and _region_gap(regions[i], regions[j], box) <= 0.0:
                    touching = (i, j)
                    break
            if touching:
                break
        if touching is None:
            break
        i, j = touching
        offenders = sorted(
            (a, b) for a in regions[i] for b in regions[j] if _cube_gap(a, b, box) <= 0.0
        )
        qa, qb = offenders[0]
        mass_a = _piece_atom_mass(measure, regions[i], qa)
        mass_b = _piece_atom_mass(measure, regions[j], qb)
        if mass_a < mass_b:
            victim, cube = i, qa
        else:  # ties shed from the later piece
            victim, cube = j, qb
        if cube.level < trim_level:
            # refine: replace by children, no mass at stake yet
            regions[victim] = Region(
                box.dim, [q for q in regions[victim].cubes if q != cube] + cube.children()
            )
        else:
            loss = _piece_atom_mass(measure, regions[victim], cube)
            if dropped[victim] + loss > allowance + 1e-15:
                raise SeparationError(
                    f"piece {victim} would shed {dropped[victim] + loss} > eps/n = {allowance}"
                )
            dropped[victim] += loss
            regions[victim] = regions[victim].without([cube])

    min_gap = min(
        (_region_gap(regions[i], regions[j], box)
         for i in range(n) for j in range(i + 1, n)),
        default=math.inf,
    )
    delta_lower = box.side if math.isinf(min_gap) else min_gap / 2.0
    return regions, delta_lower


# -- series decomposition --------------------------------------------------------

@dataclass(frozen=True)
class ScheduleStep:
    """One stage of the series: scale cap delta plus either an explicit cap
    multiplier c or a mass target eps (calibrated to the smallest c)."""

    delta: float
    c: float | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.c is None and self.eps is None:
            raise ValueError("schedule step needs c or eps")
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class SeriesDecomposition:
    base: AtomicMeasure
    pieces: tuple                  # WeightedRestriction per stage
    schedule: tuple                # resolved (c_k, delta_k) pairs
    validity: tuple                # (coarsest, finest) certified level range per piece
    residual_mass: float
    renormalized: bool

    def reconstruction_drift(self) -> float:
        if not self.pieces:
            return self.base.total_mass
        w = np.sum([p.weights for p in self.pieces], axis=0)
        return float(np.abs(w - 1.0).max(initial=0.0))

    def cumulative(self) -> list:
        out = []
        acc = np.zeros(self.base.n_atoms)
        for p in self.pieces:
            acc = acc + p.weights
            out.append(WeightedRestriction(self.base, np.minimum(acc, 1.0)))
        return out


def _admissible_levels(box: Box, delta: float, max_level: int):
    levels = [l for l in range(0, max_level + 1) if box.cube_radius(l) <= delta]
    return (min(levels), max_level) if levels else (max_level, max_level)


def series_decomposition(measure: AtomicMeasure, gauge: Gauge, schedule, max_level: int,
                         strict: bool = False) -> SeriesDecomposition:
    """Peel density-certified pieces off the measure stage by stage.

    Stage k takes the maximal sub-measure of the remainder obeying the
    (c_k, delta_k) caps; eps-driven stages calibrate c first.  Whatever
    remains after the schedule (or once the remainder drops below the
    smallest scheduled eps) becomes the final piece with its achieved cap
    recorded, so the pieces always sum to the measure atom-wise.  Strict
    mode errors out instead of absorbing a remainder above tolerance.
    """
    steps = list(schedule)
    if not steps:
        raise ValueError("schedule must be nonempty")
    box = measure.box
    n = measure.n_atoms
    total = measure.total_mass

    eps_values = [s.eps for s in steps if s.eps is not None]
    stop_mass = min(eps_values) if eps_values else 0.0

    remainder = np.ones(n)
    pieces_w, resolved, validity = [], [], []

    for step in steps:
        if box.cube_radius(max_level) > step.delta:
            raise ValueError("schedule delta below the leaf radius")
        rem_mass = float((remainder * measure.masses).sum())
        if rem_mass <= max(stop_mass, 0.0) and pieces_w:
            break
        sub_masses = remainder * measure.masses
        active = sub_masses > 0
        if step.c is not None:
            c = step.c
        else:
            c = _calibrate_on_weighted(measure, remainder, gauge, step.eps, step.delta, max_level)
        frac = np.zeros(n)
        if np.any(active):
            frac[active] = _cap_fractions(
                measure.positions[active], sub_masses[active], box, gauge, c, step.delta, max_level
            )
        piece = remainder * frac
        remainder = remainder - piece
        pieces_w.append(piece)
        resolved.append((float(c), float(step.delta)))
        validity.append(_admissible_levels(box, step.delta, max_level))

    rem_mass = float((remainder * measure.masses).sum())
    residual = 0.0
    if rem_mass > 1e-15 * max(total, 1.0):
        if strict:
            raise IncompleteDecompositionError(rem_mass)
        last_delta = resolved[-1][1] if resolved else steps[-1].delta
        rest = WeightedRestriction(measure, remainder.copy())
        achieved = density_sup(rest, gauge, last_delta, range(0, max_level + 1))
        pieces_w.append(remainder.copy())
        resolved.append((float(achieved), float(last_delta)))
        validity.append(_admissible_levels(box, last_delta, max_level))
        remainder = np.zeros(n)
    else:
        residual = rem_mass
        if pieces_w:
            pieces_w[-1] = pieces_w[-1] + remainder
            remainder = np.zeros(n)

    # renormalize out float drift so weights sum to one exactly
    renormalized = False
    if pieces_w:
        for _ in range(3):
            s = np.sum(pieces_w, axis=0)
            if np.all(s == 1.0):
                break
            renormalized = True
            pieces_w[-1] = np.clip(pieces_w[-1] + (1.0 - s), 0.0, 1.0)

    pieces = tuple(WeightedRestriction(measure, w) for w in pieces_w)
    return SeriesDecomposition(measure, pieces, tuple(resolved), tuple(validity),
                               float(residual), renormalized)


def _calibrate_on_weighted(measure, remainder, gauge, eps, delta, max_level,
                           bisections: int = 10) -> float:
    """calibrate_restriction against the remainder sub-measure."""
    masses = remainder * measure.masses
    active = masses > 0
    total = float(masses.sum())
    if eps >= total:
        return 0.0
    pos = measure.positions[active]
    mas = masses[active]

    def removed(c):
        frac = _cap_fractions(pos, mas, measure.box, gauge, c, delta, max_level)
        return float(((1.0 - frac) * mas).sum())

    return _sweep_smallest_c(removed, eps, bisections)


def approx_sequence(measure: AtomicMeasure, gauge: Gauge, schedule, max_level: int) -> list:
    """Nondecreasing approximants mu_n = sum of the first n+1 series pieces.

    tv_distance(mu, mu_n) is nonincreasing by construction since pieces are
    nonnegative.
    """
    steps = list(schedule)
    explicit = [s.c for s in steps if s.c is not None]
    if len(explicit) == len(steps) and any(c2 >= c1 for c1, c2 in zip(explicit, explicit[1:])):
        raise ValueError("cap multipliers must be strictly decreasing")
    series = series_decomposition(measure, gauge, steps, max_level)
    return series.cumulative()
