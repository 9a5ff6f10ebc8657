"""Newtonian solutions of div V = mu, mollification, the L1-perturbation
pipeline, the charge-inequality tester, and the oscillating-density example.

The Newtonian field of an atom at a is m (x-a) / (sigma_{N-1} |x-a|^N);
its flux through any enclosing sphere is m, and div V = mu holds weakly.
For N = 1 the same formula reads m sign(x-a)/2, the cumulative-mass
primitive up to the symmetric constant.  Radial mollification of such a
field has a closed form: the smeared field at distance r keeps only the
kernel mass enclosed within r, so W - rho_delta * W is supported in the
delta-neighborhoods of the atoms.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .decompose import series_decomposition
from .dyadic import Box, Region, tree_root
from .fields import GridField, MollifierSpec, unit_sphere_area
from .gauges import Gauge, PowerGauge
from .measures import AtomicMeasure, SignedAtomicMeasure, as_signed, empty_measure

logger = logging.getLogger(__name__)


# -- kernels -------------------------------------------------------------------

def _kernel_sum(points: np.ndarray, atoms: np.ndarray, masses: np.ndarray,
                dim: int, batch: int = 64) -> np.ndarray:
    """sum_a m_a (x - a) / (sigma |x - a|^N) over an (M, dim) point array."""
    sigma = unit_sphere_area(dim)
    out = np.zeros((points.shape[0], dim))
    for start in range(0, atoms.shape[0], batch):
        a = atoms[start:start + batch]
        m = masses[start:start + batch]
        diff = points[:, None, :] - a[None, :, :]
        r = np.sqrt((diff**2).sum(axis=2))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = m[None, :] / (sigma * r**dim)
            w = np.where(r > 0, w, 0.0)
        out += (diff * w[:, :, None]).sum(axis=1)
    return out


def snap_atoms_off_lattice(measure, box: Box, level: int, tol: float = 1e-9):
    """Move atoms that sit exactly on grid sample points (cell centers) by
    half a spacing per coordinate; returns (signed measure, moved count)."""
    signed = as_signed(measure)
    h = box.spacing(level)

    def fix(part: AtomicMeasure):
        if part.n_atoms == 0:
            return part, 0
        pos = np.array(part.positions)
        rel = (pos - np.asarray(box.origin)) / h - 0.5
        on_node = np.all(np.abs(rel - np.round(rel)) < tol, axis=1)
        if not np.any(on_node):
            return part, 0
        shift = np.where(pos[on_node] + 0.5 * h < np.asarray(box.origin) + box.side, 0.5 * h, -0.5 * h)
        pos[on_node] += shift
        return AtomicMeasure(part.box, pos, part.masses), int(on_node.sum())

    pos_part, moved_p = fix(signed.positive)
    neg_part, moved_n = fix(signed.negative)
    moved = moved_p + moved_n
    if moved:
        logger.info("nudged %d atom(s) off grid sample points by half a spacing", moved)
    return SignedAtomicMeasure(pos_part, neg_part), moved


def newtonian_field(measure, box: Box, level: int, snap: bool = True) -> GridField:
    """Grid samples of the Newtonian field solving div V = mu weakly."""
    signed = as_signed(measure)
    if snap:
        signed, _ = snap_atoms_off_lattice(signed, box, level)
    positions, masses = signed.parts()
    field = np.zeros((box.dim,) + (2**level,) * box.dim)
    if positions.shape[0]:
        n = 2**level
        h = box.spacing(level)
        axes = [o + h * (np.arange(n) + 0.5) for o in box.origin]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        vals = _kernel_sum(pts, positions, masses, box.dim)
        field = vals.T.reshape(field.shape)
    return GridField(box, level, field)


def _sphere_points(dim: int, n_points: int) -> tuple:
    """Quadrature nodes and normals on the unit sphere with equal weights."""
    if dim == 1:
        return np.array([[-1.0], [1.0]]), np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        theta = 2.0 * math.pi * (np.arange(n_points) + 0.5) / n_points
        normals = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        w = np.full(n_points, 2.0 * math.pi / n_points)
        return normals, normals, w
    if dim == 3:
        i = np.arange(n_points)
        z = (2.0 * i + 1.0) / n_points - 1.0
        golden = math.pi * (3.0 - math.sqrt(5.0))
        phi = golden * i
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        normals = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
        w = np.full(n_points, 4.0 * math.pi / n_points)
        return normals, normals, w
    raise ValueError("sphere quadrature implemented for N <= 3")


def gauss_flux(measure, center, radius: float, n_points: int = 20000) -> float:
    """Flux of the Newtonian field through the sphere B(center; radius),
    evaluated by direct kernel summation at the quadrature nodes."""
    signed = as_signed(measure)
    positions, masses = signed.parts()
    dim = signed.dim
    pts_unit, normals, w = _sphere_points(dim, n_points)
    pts = np.asarray(center) + radius * pts_unit
    vals = _kernel_sum(pts, positions, masses, dim)
    # surface element scales with radius^(N-1)
    return float(((vals * normals).sum(axis=1) * w).sum() * radius ** (dim - 1))


def weak_div_residual(field: GridField, measure, phi: GridField) -> float:
    """| int V . grad(phi) + int phi dmu |, the defect of the weak identity
    div V = mu against a compactly supported test function."""
    if field.rank != "vector" or phi.rank != "scalar":
        raise ValueError("need a vector field and a scalar test function")
    if field.box != phi.box or field.level != phi.level:
        raise ValueError("field and test function live on different grids")
    vals = phi.values
    shell = np.zeros_like(vals, dtype=bool)
    for axis in range(phi.dim):
        sl = [slice(None)] * phi.dim
        sl[axis] = 0
        shell[tuple(sl)] = True
        sl[axis] = -1
        shell[tuple(sl)] = True
    if np.any(vals[shell] != 0.0):
        raise ValueError("test function support touches the grid boundary shell")
    h = phi.spacing
    grads = np.gradient(vals, h)
    if phi.dim == 1:
        grads = [grads]
    pairing = sum((field.values[k] * grads[k]).sum() for k in range(phi.dim)) * h**phi.dim
    signed = as_signed(measure)
    atom_sum = 0.0
    if signed.positive.n_atoms:
        atom_sum += float((phi.interpolate(signed.positive.positions) * signed.positive.masses).sum())
    if signed.negative.n_atoms:
        atom_sum -= float((phi.interpolate(signed.negative.positions) * signed.negative.masses).sum())
    return abs(pairing + atom_sum)


# -- mollification ---------------------------------------------------------------

def mollify_measure(measure, spec: MollifierSpec, box: Box, level: int) -> GridField:
    """rho_delta * nu sampled on the grid.

    Each atom stamps the sampled kernel renormalized to unit discrete mass,
    so the quadrature of the result equals the measure of the whole space
    up to float roundoff (kernels must fit inside the box).
    """
    signed = as_signed(measure)
    n = 2**level
    h = box.spacing(level)
    values = np.zeros((n,) * box.dim)
    kernel = spec.stencil(h)
    half = (kernel.shape[0] - 1) // 2
    origin = np.asarray(box.origin)
    for part, sign in ((signed.positive, 1.0), (signed.negative, -1.0)):
        for x, m in zip(part.positions, part.masses):
            center = np.floor((x - origin) / h - 0.5).astype(int)
            lo = center - half + 1
            # kernel node k sits at cell index lo + k; clip to the grid
            window = []
            kwin = []
            ok = True
            for d in range(box.dim):
                g0, g1 = lo[d], lo[d] + kernel.shape[0]
                c0, c1 = max(g0, 0), min(g1, n)
                if c0 >= c1:
                    ok = False
                    break
                window.append(slice(c0, c1))
                kwin.append(slice(c0 - g0, c1 - g0))
            if not ok:
                continue
            centers = [origin[d] + h * (np.arange(n) + 0.5) for d in range(box.dim)]
            local = [centers[d][window[d]] - x[d] for d in range(box.dim)]
            mesh = np.meshgrid(*local, indexing="ij")
            pts = np.stack(mesh, axis=-1)
            stamp = spec.profile(pts)
            total = stamp.sum() * h**box.dim
            if total <= 0:
                raise ValueError("mollifier kernel missed every cell center")
            values[tuple(window)] += sign * m * stamp / total
    return GridField(box, level, values)


def mollify_field(field: GridField, spec: MollifierSpec) -> GridField:
    """Discrete convolution of a grid field with the sampled unit-mass kernel."""
    h = field.spacing
    kernel = spec.stencil(h) * h**field.dim  # discrete weights summing to 1
    if field.rank == "scalar":
        out = signal.fftconvolve(field.values, kernel, mode="same")
    else:
        out = np.stack([signal.fftconvolve(field.values[k], kernel, mode="same")
                        for k in range(field.dim)])
    return GridField(field.box, field.level, out)


def mollification_defect_field(measure, spec: MollifierSpec, box: Box, level: int) -> GridField:
    """W - rho_delta * W for the Newtonian W of `measure`, sampled exactly
    via the enclosed-mass law: the defect of one atom at distance r is
    m K(r) (1 - M(r/delta)), zero beyond delta."""
    signed = as_signed(measure)
    positions, masses = signed.parts()
    sigma = unit_sphere_area(box.dim)
    n = 2**level
    h = box.spacing(level)
    axes = [o + h * (np.arange(n) + 0.5) for o in box.origin]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    defect = np.zeros((pts.shape[0], box.dim))
    for a, m in zip(positions, masses):
        diff = pts - a
        r = np.sqrt((diff**2).sum(axis=1))
        near = r < spec.scale
        if not np.any(near):
            continue
        rn = r[near]
        frac = 1.0 - spec.enclosed_mass(rn)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(rn > 0, m * frac / (sigma * rn**box.dim), 0.0)
        defect[near] += diff[near] * w[:, None]
    return GridField(box, level, defect.T.reshape((box.dim,) + (n,) * box.dim))


def mollification_defect_sup(measure, spec: MollifierSpec, box: Box, level: int) -> float:
    return mollification_defect_field(measure, spec, box, level).sup_norm()


def oscillation_table(field: GridField, max_power: int | None = None) -> list:
    """Cumulative max oscillation |V(x + d e_i) - V(x)| over axis offsets of
    d = 1, 2, 4, ... cells; nondecreasing in d by construction."""
    n = 2**field.level
    if max_power is None:
        max_power = field.level - 1
    vals = field.values if field.rank == "vector" else field.values[None]
    table = []
    running = 0.0
    for p in range(0, max_power + 1):
        d = 2**p
        if d >= n:
            break
        worst = 0.0
        for axis in range(field.dim):
            lead = [slice(None)] * field.dim
            lag = [slice(None)] * field.dim
            lead[axis] = slice(d, None)
            lag[axis] = slice(None, -d)
            diff = vals[(slice(None),) + tuple(lead)] - vals[(slice(None),) + tuple(lag)]
            worst = max(worst, float(np.sqrt((diff**2).sum(axis=0)).max(initial=0.0)))
        running = max(running, worst)
        table.append((d * field.spacing, running))
    return table


# -- Theorem-style L1 perturbation -----------------------------------------------

@dataclass(frozen=True)
class TailPieceRecord:
    index: int
    mass: float
    delta: float
    alpha: float
    defect: float
    bound_met: bool


@dataclass(frozen=True)
class PerturbationResult:
    field: GridField               # V, continuous part plus mollification defects
    density: GridField             # f, the L1 remainder
    cutoff: int                    # j: pieces 0..j stay unmollified
    tail_mass: float               # sum of tail piece masses (grid independent)
    tail_pieces: tuple             # TailPieceRecord per mollified piece
    alpha_budget: float            # declared bound on sum alpha_k
    piece_masses: tuple            # all piece TV masses
    modulus_table: tuple           # (distance, max oscillation) of V
    nudged_atoms: int

    @property
    def alpha_sum(self) -> float:
        return float(sum(p.alpha for p in self.tail_pieces))

    def density_l1(self) -> float:
        return self.density.abs_quadrature()


def l1_perturbation(measure, eps: float, schedule, box: Box, level: int,
                    gauge: Gauge | None = None, alpha_scale: float | None = None) -> PerturbationResult:
    """Split mu = div V + f with the tail mass (hence ||f||_L1) at most eps.

    The signed parts are series-decomposed under `schedule`; the cutoff j is
    the smallest index whose tail mass drops to eps.  Pieces past the cutoff
    are replaced by their mollification defect plus a mollified density.
    The per-piece defect target is alpha_k = A 2^-k; the deterministic
    search halves delta from the resolvable maximum and floors at two
    spacings.  At atomic resolution the grid-sup defect near a piece's own
    atoms need not reach alpha_k; the record then carries bound_met=False
    with the achieved value (the assembled identity mu = div V + f is
    unaffected by the choice of delta_k).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    signed = as_signed(measure)
    if gauge is None:
        if box.dim < 2:
            raise ValueError("default codimension-one gauge needs dim >= 2")
        gauge = PowerGauge(box.dim - 1)
    signed, nudged = snap_atoms_off_lattice(signed, box, level)

    def split(part: AtomicMeasure):
        if part.n_atoms == 0:
            return []
        series = series_decomposition(part, gauge, schedule, level)
        return [p.materialize() for p in series.pieces]

    plus_pieces = split(signed.positive)
    minus_pieces = split(signed.negative)
    n_pieces = max(len(plus_pieces), len(minus_pieces), 1)

    def piece(k):
        p = plus_pieces[k] if k < len(plus_pieces) else empty_measure(box)
        m = minus_pieces[k] if k < len(minus_pieces) else empty_measure(box)
        return SignedAtomicMeasure(p, m)

    pieces = [piece(k) for k in range(n_pieces)]
    masses = [p.total_variation for p in pieces]

    # smallest cutoff with tail at most eps; j = -1 mollifies everything
    cutoff = n_pieces - 1
    for j in range(-1, n_pieces):
        if sum(masses[j + 1:]) <= eps:
            cutoff = j
            break
    tail_mass = float(sum(masses[cutoff + 1:]))

    a_scale = eps if alpha_scale is None else alpha_scale
    h = box.spacing(level)
    n = 2**level

    v_values = np.zeros((box.dim,) + (n,) * box.dim)
    f_values = np.zeros((n,) * box.dim)
    tail_records = []

    for k, pk in enumerate(pieces):
        if pk.total_variation == 0.0:
            if k > cutoff:
                tail_records.append(TailPieceRecord(k, 0.0, 0.0, a_scale * 2.0**-k, 0.0, True))
            continue
        if k <= cutoff:
            v_values += newtonian_field(pk, box, level, snap=False).values
            continue
        alpha_k = a_scale * 2.0**-k
        positions, _ = pk.parts()
        margin = float(min(
            np.min(positions - np.asarray(box.origin)),
            np.min(np.asarray(box.origin) + box.side - positions),
        ))
        delta_max = max(min(box.side / 4.0, margin), 2.0 * h)
        delta = delta_max
        met = False
        while True:
            spec = MollifierSpec(box.dim, delta)
            defect_field = mollification_defect_field(pk, spec, box, level)
            defect = defect_field.sup_norm()
            if defect <= alpha_k:
                met = True
                break
            if delta / 2.0 < 2.0 * h:
                break
            delta /= 2.0
        v_values += defect_field.values
        f_values += mollify_measure(pk, spec, box, level).values
        tail_records.append(TailPieceRecord(k, masses[k], delta, alpha_k, defect, met))

    v_field = GridField(box, level, v_values)
    f_field = GridField(box, level, f_values)
    table = tuple(oscillation_table(v_field, max_power=min(level - 1, 6)))
    return PerturbationResult(
        field=v_field, density=f_field, cutoff=cutoff, tail_mass=tail_mass,
        tail_pieces=tuple(tail_records), alpha_budget=2.0 * a_scale,
        piece_masses=tuple(masses), modulus_table=table, nudged_atoms=nudged,
    )


# -- charge tester ----------------------------------------------------------------

B_INTEGRAL = 16.0 / 15.0      # integral of (1 - u^2)^2 over [-1, 1]
B_DERIV_ABS_INTEGRAL = 2.0    # total variation of the unimodal profile


@dataclass(frozen=True)
class BumpSpec:
    """Tensor-product quartic spline bump s * prod (1 - ((x_i-c_i)/w_i)^2)^2.

    All norms are closed forms, so a stored bump replays its recorded
    functional values bit-exactly.
    """

    center: tuple
    widths: tuple
    sign: float = 1.0

    @property
    def dim(self) -> int:
        return len(self.center)

    def value(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        u = (pts - np.asarray(self.center)) / np.asarray(self.widths)
        inside = np.abs(u) < 1.0
        prof = np.where(inside, (1.0 - u**2) ** 2, 0.0)
        return self.sign * prof.prod(axis=1)

    def l1_norm(self) -> float:
        out = abs(self.sign)
        for w in self.widths:
            out *= w * B_INTEGRAL
        return out

    def sup_norm(self) -> float:
        return abs(self.sign)

    def grad_l1_norm(self) -> float:
        total = 0.0
        for i in range(self.dim):
            term = B_DERIV_ABS_INTEGRAL
            for j, w in enumerate(self.widths):
                if j != i:
                    term *= w * B_INTEGRAL
            total += term
        return abs(self.sign) * total

    def support_slices(self, box: Box, level: int):
        n = 2**level
        h = box.spacing(level)
        slices = []
        for d in range(box.dim):
            lo = (self.center[d] - self.widths[d] - box.origin[d]) / h - 0.5
            hi = (self.center[d] + self.widths[d] - box.origin[d]) / h + 0.5
            a = max(int(math.floor(lo)), 0)
            b = min(int(math.ceil(hi)) + 1, n)
            if a >= b:
                return None
            slices.append(slice(a, b))
        return tuple(slices)

    def to_dict(self) -> dict:
        return {"center": list(self.center), "widths": list(self.widths), "sign": self.sign}

    @staticmethod
    def from_dict(d: dict) -> "BumpSpec":
        return BumpSpec(tuple(d["center"]), tuple(d["widths"]), float(d["sign"]))


def _functionals(bump: BumpSpec, target, grid_norms: bool) -> dict:
    """integral against the target plus the three test-function norms.

    Atomic targets pair by exact atom sums against analytic norms; grid
    targets use the target's own quadrature for both the pairing and
    ||phi||_1, which keeps |int phi f| <= sup|f| ||phi||_1 exact."""
    if isinstance(target, GridField):
        sl = bump.support_slices(target.box, target.level)
        h = target.spacing
        if sl is None:
            integral, l1 = 0.0, 0.0
        else:
            axes = target.axis_centers()
            local = [axes[d][sl[d]] for d in range(target.dim)]
            mesh = np.meshgrid(*local, indexing="ij")
            pts = np.stack([g.ravel() for g in mesh], axis=-1)
            phi = bump.value(pts).reshape([s.stop - s.start for s in sl])
            integral = float((phi * target.values[sl]).sum() * h**target.dim)
            l1 = float(np.abs(phi).sum() * h**target.dim) if grid_norms else bump.l1_norm()
    else:
        signed = as_signed(target)
        integral = 0.0
        if signed.positive.n_atoms:
            integral += float((bump.value(signed.positive.positions) * signed.positive.masses).sum())
        if signed.negative.n_atoms:
            integral -= float((bump.value(signed.negative.positions) * signed.negative.masses).sum())
        l1 = bump.l1_norm()
    return {
        "integral": integral,
        "l1": l1,
        "grad_l1": bump.grad_l1_norm(),
        "sup": bump.sup_norm(),
    }


def required_constant(bump: BumpSpec, target, epsilon: float, grid_norms: bool = True) -> dict:
    """Smallest C making |int phi dmu| <= C ||phi||_1 + eps(||Dphi||_1 + ||phi||_inf)
    hold for this bump, with the margin used by the refutation ladder."""
    f = _functionals(bump, target, grid_norms)
    margin = abs(f["integral"]) - epsilon * (f["grad_l1"] + f["sup"])
    c_req = margin / f["l1"] if f["l1"] > 0 else (math.inf if margin > 0 else 0.0)
    f["margin"] = margin
    f["required_c"] = max(0.0, c_req)
    return f


@dataclass(frozen=True)
class ChargeReport:
    verdict: str                  # "satisfied-on-family" | "violated"
    estimated_c: float
    epsilon: float
    family: dict
    worst: dict                   # bump params + functional values
    trials: int
    seed: int
    refuted_at_step: int | None


def _ladder_anchors(target, region: Region, box: Box):
    """Deterministic shrink anchors: every atom of an atomic target, or the
    largest-|value| cell of a grid target."""
    if isinstance(target, GridField):
        flat = np.abs(target.values).ravel()
        best = int(np.argmax(flat))
        idx = np.unravel_index(best, target.values.shape)
        h = target.spacing
        anchor = tuple(target.box.origin[d] + h * (idx[d] + 0.5) for d in range(target.dim))
        return [anchor]
    signed = as_signed(target)
    pts = [tuple(map(float, x)) for x in signed.positive.positions]
    pts += [tuple(map(float, x)) for x in signed.negative.positions]
    return pts


def _anchor_margin(anchor, region: Region, box: Box) -> float:
    """Largest half-width keeping an anchor-centered bump inside the region
    cube that contains the anchor."""
    best = 0.0
    for cube in region:
        lo = cube.low(box)
        hi = lo + cube.side(box)
        if np.all(anchor >= lo) and np.all(anchor < hi):
            best = max(best, float(min(np.min(anchor - lo), np.min(hi - anchor))))
    return best


def charge_test(target, region: Region | None, epsilon: float, trials: int, seed: int,
                box: Box | None = None, width_bounds: tuple | None = None,
                ladder_steps: int = 20, c_cap: float = 1e6) -> ChargeReport:
    """Probe the charge inequality over a random bump family plus shrinking
    ladders; falsification-only (a pass quantifies over the family alone).

    Violation means: along some ladder the required constant exceeds `c_cap`
    while the eps-margin stays positive, i.e. no finite C can work because
    ||phi||_1 collapses faster than the pairing.
    """
    if isinstance(target, GridField):
        box = target.box
    elif box is None:
        box = as_signed(target).box
    if region is None:
        region = Region(box.dim, [tree_root(box.dim)])
    if region.is_empty:
        raise ValueError("charge test needs a nonempty test region")
    grid_norms = isinstance(target, GridField)

    if width_bounds is None:
        w_max = min(cube.side(box) for cube in region) / 2.0
        if grid_norms:
            w_min = min(4.0 * target.spacing, w_max / 2.0)
        else:
            w_min = w_max / 64.0
    else:
        w_min, w_max = width_bounds
    if not 0 < w_min <= w_max:
        raise ValueError("invalid width bounds")

    rng = np.random.default_rng(seed)
    cubes = sorted(region.cubes)
    volumes = np.array([cube.side(box) ** box.dim for cube in cubes])
    probs = volumes / volumes.sum()

    worst = None
    est_c = 0.0
    for _ in range(int(trials)):
        cube = cubes[rng.choice(len(cubes), p=probs)]
        side = cube.side(box)
        w_hi = min(w_max, side / 2.0)
        w_lo = min(w_min, w_hi)
        w = float(np.exp(rng.uniform(np.log(w_lo), np.log(w_hi))))
        lo = cube.low(box) + w
        hi = cube.low(box) + side - w
        center = tuple(float(c) for c in lo + rng.random(box.dim) * np.maximum(hi - lo, 0.0))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        bump = BumpSpec(center, (w,) * box.dim, sign)
        rec = required_constant(bump, target, epsilon, grid_norms)
        if rec["required_c"] > est_c:
            est_c = rec["required_c"]
            worst = {"bump": bump.to_dict(), **rec, "kind": "random"}

    refuted_at = None
    for anchor in _ladder_anchors(target, region, box):
        w0 = _anchor_margin(np.asarray(anchor), region, box)
        if w0 <= 0:
            continue
        for step in range(ladder_steps):
            w = w0 * 2.0**-step
            bump = BumpSpec(tuple(anchor), (w,) * box.dim, 1.0)
            rec = required_constant(bump, target, epsilon, grid_norms)
            if rec["required_c"] > est_c or worst is None:
                est_c = max(est_c, rec["required_c"])
                worst = {"bump": bump.to_dict(), **rec, "kind": "ladder", "step": step}
            if rec["margin"] > 0 and rec["required_c"] > c_cap:
                refuted_at = step
                break
        if refuted_at is not None:
            break

    verdict = "violated" if refuted_at is not None else "satisfied-on-family"
    family = {
        "kind": "tensor-spline-bumps",
        "width_bounds": [w_min, w_max],
        "ladder_steps": ladder_steps,
        "c_cap": c_cap,
        "grid_norms": grid_norms,
    }
    return ChargeReport(verdict, est_c, epsilon, family, worst or {}, int(trials), seed, refuted_at)


# -- the oscillating example -------------------------------------------------------

def _radial_terms(r: np.ndarray, alpha: float):
    """sin(1/r^alpha) and cos(1/r^alpha) with the r = 0 cell left to the caller."""
    phase = r ** -alpha
    return np.sin(phase), np.cos(phase)


def u_alpha_field(alpha: float, box: Box, level: int, bump_radius: float | None = None,
                  block_rows: int = 256) -> tuple:
    """The oscillating function u(x) = |x| sin(1/|x|^alpha) (u(0) = 0) and
    f = div(u W) for the smooth bump field W = (1 - (|x|/R)^2)^2 e_1.

    f is assembled analytically away from the origin; the cell containing
    the origin gets the average of its axis neighbors (removable-singularity
    convention).  Levels >= 8 are sensible for alpha <= 2: the oscillation
    near zero is resolution limited either way.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = 2**level
    h = box.spacing(level)
    origin = np.asarray(box.origin)
    if bump_radius is None:
        bump_radius = 0.45 * box.side
    r_bump = float(bump_radius)

    u_vals = np.zeros((n,) * box.dim)
    f_vals = np.zeros((n,) * box.dim)
    axes = [origin[d] + h * (np.arange(n) + 0.5) for d in range(box.dim)]

    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        local_axes = [axes[0][start:stop]] + axes[1:]
        mesh = np.meshgrid(*local_axes, indexing="ij")
        x1 = mesh[0]
        r2 = sum(g**2 for g in mesh)
        r = np.sqrt(r2)
        safe = r > 0
        rs = np.where(safe, r, 1.0)
        sin_t, cos_t = _radial_terms(rs, alpha)
        u_blk = np.where(safe, r * sin_t, 0.0)
        rho = rs / r_bump
        inside = rho < 1.0
        bump = np.where(inside, (1.0 - rho**2) ** 2, 0.0)
        div_w = np.where(inside, -4.0 * x1 * (1.0 - rho**2) / r_bump**2, 0.0)
        grad_term = (x1 / rs) * (sin_t - alpha * rs**-alpha * cos_t) * bump
        f_blk = np.where(safe, grad_term + u_blk * div_w, 0.0)
        sl = (slice(start, stop),) + (slice(None),) * (box.dim - 1)
        u_vals[sl] = u_blk
        f_vals[sl] = f_blk

    # removable singularity: the origin cell (if any) averages its neighbors
    rel = -origin / h - 0.5
    idx = np.round(rel).astype(int)
    if np.all(np.abs(rel - idx) < 1e-9) and np.all(idx >= 0) and np.all(idx < n):
        idx = tuple(idx)
        neighbors = []
        for d in range(box.dim):
            for off in (-1, 1):
                j = list(idx)
                j[d] += off
                if 0 <= j[d] < n:
                    neighbors.append(f_vals[tuple(j)])
        if neighbors:
            f_vals[idx] = float(np.mean(neighbors))
    return GridField(box, level, u_vals), GridField(box, level, f_vals)


def density_profile_plus(field: GridField, radii, exponent: float | None = None,
                         center=None, block_rows: int = 256) -> list:
    """D(r) = r^-exponent * integral of max(f, 0) over the ball B(center; r),
    by midpoint quadrature over cells whose centers fall in the ball."""
    if field.rank != "scalar":
        raise ValueError("density profile needs a scalar field")
    if exponent is None:
        exponent = field.dim - 1
    if center is None:
        center = (0.0,) * field.dim
    h = field.spacing
    radii = sorted((float(r) for r in radii), reverse=True)
    for r in radii:
        if r < 4.0 * h:
            raise ValueError(f"radius {r} under-resolved: needs >= 4 spacings ({4*h})")
    axes = field.axis_centers()
    n = axes[0].shape[0]
    sums = np.zeros(len(radii))
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        local = [axes[0][start:stop]] + axes[1:]
        mesh = np.meshgrid(*local, indexing="ij")
        r2 = sum((g - c) ** 2 for g, c in zip(mesh, center))
        sl = (slice(start, stop),) + (slice(None),) * (field.dim - 1)
        pos = np.maximum(field.values[sl], 0.0)
        for i, r in enumerate(radii):
            sums[i] += float(pos[r2 <= r * r].sum())
    return [(r, float(s) * h**field.dim / r**exponent) for r, s in zip(radii, sums)]
