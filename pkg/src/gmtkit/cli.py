"""gmtkit command line: every pipeline behind one binary with JSON reports.

Each subcommand builds a RunConfig dict, hands it to a runner, and writes
`report.json` (config + input digests + certificates + output digests)
into the output directory.  Runs are deterministic: the same config and
inputs give byte-identical reports.  `gmtkit verify report.json` replays
the run from the embedded config and exits 2 on any certificate drift.

Exit codes: 0 success, 1 usage/IO/parameter errors, 2 certificate failure
in strict mode or verification mismatch.
"""

from __future__ import annotations

import csv
import math
import os
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from . import content as ct
from . import decompose as dc
from . import divfield as dv
from . import fileio, plotting
from .dyadic import Box, Region, tree_root
from .frostman import frostman_construct
from .gauges import PowerLogGauge, PowerGauge
from .measures import AtomicMeasure, SignedAtomicMeasure, as_signed, tv_distance
from .reports import RunReport, canonical_json, load_report, sha256_file

click.UsageError.exit_code = 1  # spec reserves 2 for certificate failures


def _parse_delta(text: str) -> float:
    if text in ("inf", "Inf", "INF"):
        return math.inf
    return float(text)


def _parse_schedule(text: str):
    """'delta,c,eps;delta,c,eps;...' with '-' for an absent c or eps."""
    steps = []
    for part in text.split(";"):
        fields = [f.strip() for f in part.split(",")]
        if len(fields) != 3:
            raise ValueError(f"schedule step {part!r} must be 'delta,c,eps' ('-' for absent)")
        delta = _parse_delta(fields[0])
        c = None if fields[1] in ("-", "") else float(fields[1])
        eps = None if fields[2] in ("-", "") else float(fields[2])
        steps.append(dc.ScheduleStep(delta=delta, c=c, eps=eps))
    return steps


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _common(fn):
    fn = click.option("--out", default="gmtkit-out", show_default=True,
                      help="output directory for report and artifacts")(fn)
    fn = click.option("--seed", default=0, show_default=True, type=int)(fn)
    fn = click.option("--strict", is_flag=True, help="exit 2 when a certificate fails")(fn)
    fn = click.option("--csv", "emit_csv", is_flag=True, help="emit CSV tables")(fn)
    fn = click.option("--no-plot", is_flag=True, help="skip figure rendering")(fn)
    return fn


def _finish(report: RunReport, config: dict, failures) -> int:
    path = report.write(config["out"])
    click.echo(f"report: {path}")
    if failures and config.get("strict"):
        click.echo(f"certificate failure: {', '.join(failures)}", err=True)
        return 2
    return 0


# ---------------------------------------------------------------------------
# runners: pure functions of (config, out_dir) so `verify` can replay them
# ---------------------------------------------------------------------------

def run_content(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["region"])
    report.add_input(config["gauge"])
    region = fileio.read_region(config["region"])
    gauge = fileio.read_gauge(config["gauge"])
    delta = _parse_delta(config["delta"])
    result = ct.dyadic_content(region, gauge, delta, config["max_level"])
    box = Box((0.0,) * region.dim, 1.0)
    price = result.cover_price(box, gauge)
    cert = {
        "value": result.value,
        "cover_size": len(result.optimal_cover),
        "cover_price": price,
        "price_matches_value": bool(abs(price - result.value) <= 1e-12 * max(1.0, result.value)),
        "delta": config["delta"],
    }
    failures = [] if cert["price_matches_value"] else ["price_matches_value"]
    report.certify("content", cert)
    cover_path = out_dir / "cover.json"
    fileio.write_region(result.optimal_cover, cover_path)
    report.add_output(cover_path)
    if config["emit_csv"]:
        rows = [(q.level, "/".join(map(str, q.index)), gauge(q.radius(box)))
                for q in result.optimal_cover]
        csv_path = out_dir / "cover.csv"
        _write_csv(csv_path, ["level", "index", "price"], rows)
        report.add_output(csv_path)
        if not config["no_plot"] and region.dim == 2:
            fig = out_dir / "cover.png"
            plotting.save_cubes(fig, region, box, "region (blue) and optimal cover (red)",
                                highlight=result.optimal_cover)
            report.add_figure(fig)
    return report, failures


def run_density(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    report.add_input(config["gauge"])
    measure = fileio.read_measure(config["measure"])
    if isinstance(measure, SignedAtomicMeasure):
        raise ValueError("density trends take a nonnegative measure")
    gauge = fileio.read_gauge(config["gauge"])
    delta = _parse_delta(config["delta"])
    lo, hi = config["levels"]
    table = ct.density_levels(measure, gauge, range(lo, hi + 1), delta, config["shifted"])
    sup = max((v for _, v in table), default=0.0)
    report.certify("density", {"per_level": table, "sup": sup, "shifted": config["shifted"]})
    if config["emit_csv"]:
        csv_path = out_dir / "density.csv"
        _write_csv(csv_path, ["level", "max_density"], table)
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "density.png"
            plotting.save_xy(fig, table, "level", "max mu(Q)/h(r_Q)", "per-level density maxima",
                             logy=True)
            report.add_figure(fig)
    return report, []


def run_profile(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    report.add_input(config["gauge"])
    measure = fileio.read_measure(config["measure"])
    gauge = fileio.read_gauge(config["gauge"])
    delta = _parse_delta(config["delta"])
    budgets = [float(b) for b in config["budgets"].split(",") if b.strip()]
    prof = ct.concentration_profile(measure, gauge, delta, budgets, config["max_level"])
    report.certify("profile", {
        "entries": prof.entries, "exact": prof.exact, "total_mass": prof.total_mass,
        "vertices": prof.vertices,
    })
    if config["emit_csv"]:
        csv_path = out_dir / "profile.csv"
        _write_csv(csv_path, ["budget", "max_mass"], prof.entries)
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "profile.png"
            plotting.save_xy(fig, prof.entries, "content budget", "capturable mass",
                             "concentration profile" + ("" if prof.exact else " (envelope)"))
            report.add_figure(fig)
    return report, []


def run_frostman(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["region"])
    report.add_input(config["gauge"])
    region = fileio.read_region(config["region"])
    gauge = fileio.read_gauge(config["gauge"])
    result = frostman_construct(region, gauge, config["depth"])
    box = result.measure.box
    content_value = ct.dyadic_content(region, gauge, math.inf, config["depth"], box=box).value
    levels = range(0, config["depth"] + 1)
    per_level = ct.density_levels(result.measure, gauge, levels)
    cap_ok = all(v <= 1.0 + 1e-9 for _, v in per_level)
    cover_price = result.cover_price(gauge)
    cert = {
        "total_mass": result.total_mass,
        "cover_size": len(result.saturated_cover),
        "cover_price": cover_price,
        "content_value": content_value,
        "mass_matches_cover_price": bool(abs(result.total_mass - cover_price)
                                         <= 1e-9 * max(1.0, cover_price)),
        "mass_dominates_content": bool(result.total_mass >= content_value * (1.0 - 1e-12)),
        "cap_ok": bool(cap_ok),
    }
    failures = [k for k in ("mass_matches_cover_price", "mass_dominates_content", "cap_ok")
                if not cert[k]]
    report.certify("frostman", cert)
    mu_path = Path(config["measure_out"]) if config.get("measure_out") else out_dir / "mu.json"
    fileio.write_measure(result.measure, mu_path)
    report.add_output(mu_path)
    if config["emit_csv"]:
        csv_path = out_dir / "frostman_density.csv"
        _write_csv(csv_path, ["level", "max_density"], per_level)
        report.add_output(csv_path)
        if not config["no_plot"] and region.dim == 2:
            fig = out_dir / "frostman_atoms.png"
            plotting.save_atoms(fig, result.measure, "Frostman atoms (size ~ mass)")
            report.add_figure(fig)
    return report, failures


def _restriction_cert(measure, gauge, restriction, c, delta, max_level):
    removed = tv_distance(measure, restriction)
    levels = range(0, max_level + 1)
    sup = ct.density_sup(restriction, gauge, delta, levels)
    return {
        "c": c,
        "kept_mass": restriction.mass,
        "removed_mass": removed,
        "mass_conserved": bool(abs(removed + restriction.mass - measure.total_mass)
                               <= 1e-9 * max(1.0, measure.total_mass)),
        "density_sup": sup,
        "cap_ok": bool(sup <= c * (1.0 + 1e-9) or c == 0.0),
    }


def run_restrict(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    report.add_input(config["gauge"])
    measure = fileio.read_measure(config["measure"])
    gauge = fileio.read_gauge(config["gauge"])
    delta = _parse_delta(config["delta"])
    nu = dc.max_restriction(measure, gauge, config["c"], delta, config["max_level"])
    cert = _restriction_cert(measure, gauge, nu, config["c"], delta, config["max_level"])
    failures = [k for k in ("mass_conserved", "cap_ok") if not cert[k]]
    report.certify("restrict", cert)
    _emit_restriction(report, config, out_dir, measure, nu)
    return report, failures


def run_calibrate(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    report.add_input(config["gauge"])
    measure = fileio.read_measure(config["measure"])
    gauge = fileio.read_gauge(config["gauge"])
    delta = _parse_delta(config["delta"])
    c, nu = dc.calibrate_restriction(measure, gauge, config["eps"], delta, config["max_level"])
    cert = _restriction_cert(measure, gauge, nu, c, delta, config["max_level"])
    cert["eps"] = config["eps"]
    cert["removed_within_eps"] = bool(cert["removed_mass"] <= config["eps"] * (1.0 + 1e-12))
    failures = [k for k in ("mass_conserved", "cap_ok", "removed_within_eps") if not cert[k]]
    report.certify("calibrate", cert)
    _emit_restriction(report, config, out_dir, measure, nu)
    return report, failures


def _emit_restriction(report, config, out_dir, measure, nu):
    weights_path = out_dir / "weights.json"
    weights_path.write_text(canonical_json({"weights": list(map(float, nu.weights))}))
    report.add_output(weights_path)
    kept = nu.materialize()
    kept_path = out_dir / "restricted.json"
    fileio.write_measure(kept, kept_path)
    report.add_output(kept_path)
    if config["emit_csv"]:
        csv_path = out_dir / "weights.csv"
        _write_csv(csv_path, ["atom", "weight", "mass"],
                   [(i, float(w), float(m)) for i, (w, m) in enumerate(zip(nu.weights, measure.masses))])
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "weights.png"
            plotting.save_xy(fig, [(i, float(w)) for i, w in enumerate(nu.weights)],
                             "atom index", "kept weight", "restriction weights")
            report.add_figure(fig)


def run_hahn(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    measure = fileio.read_measure(config["measure"])
    gauge = fileio.read_gauge(config["gauge"]) if config.get("gauge") else None
    if config.get("gauge"):
        report.add_input(config["gauge"])
    oracle = dc.oracle_from_spec(config["oracle"], measure, gauge, config["max_level"])
    result = dc.greedy_hahn(measure, oracle, theta=config["theta"], search=config["search"],
                            max_level=config["max_level"])
    cert = {
        "kept_atoms": list(result.kept),
        "pieces": [{"atoms": list(p.atoms), "oracle": p.oracle_value, "mass": p.mass}
                   for p in result.pieces],
        "pieces_dominated": bool(all(p.oracle_value <= p.mass for p in result.pieces)),
        "kept_certified": bool(result.certified),
        "complement_oracle": result.complement_oracle_value,
        "complement_mass": result.complement_mass,
        "oracle": oracle.describe(),
        "theta": result.theta,
    }
    failures = [k for k in ("pieces_dominated", "kept_certified") if not cert[k]]
    report.certify("hahn", cert)
    if config["emit_csv"]:
        csv_path = out_dir / "hahn_pieces.csv"
        _write_csv(csv_path, ["piece", "oracle_value", "mass"],
                   [(i, p.oracle_value, p.mass) for i, p in enumerate(result.pieces)])
        report.add_output(csv_path)
        if not config["no_plot"] and result.pieces:
            fig = out_dir / "hahn_pieces.png"
            series = {
                "T(F_k)": [(i, p.oracle_value) for i, p in enumerate(result.pieces)],
                "mu(F_k)": [(i, p.mass) for i, p in enumerate(result.pieces)],
            }
            plotting.save_multi(fig, series, "removal order", "value", "greedy Hahn pieces")
            report.add_figure(fig)
    return report, failures


def run_series(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    report.add_input(config["gauge"])
    measure = fileio.read_measure(config["measure"])
    gauge = fileio.read_gauge(config["gauge"])
    schedule = _parse_schedule(config["schedule"])
    series = dc.series_decomposition(measure, gauge, schedule, config["max_level"],
                                     strict=config.get("strict", False))
    piece_certs = []
    for piece, (c, delta), (lo, hi) in zip(series.pieces, series.schedule, series.validity):
        sup = ct.density_sup(piece, gauge, delta, range(0, config["max_level"] + 1))
        piece_certs.append({
            "mass": piece.mass, "c": c, "delta": delta, "density_sup": sup,
            "cap_ok": bool(sup <= c * (1.0 + 1e-9) or piece.mass == 0.0),
            "validity_levels": [lo, hi],
        })
    drift = series.reconstruction_drift()
    cert = {
        "pieces": piece_certs,
        "residual_mass": series.residual_mass,
        "reconstruction_drift": drift,
        "conserved": bool(drift <= 1e-12),
        "renormalized": series.renormalized,
        "all_caps_ok": bool(all(p["cap_ok"] for p in piece_certs)),
    }
    failures = [k for k in ("conserved", "all_caps_ok") if not cert[k]]
    report.certify("series", cert)
    if config["emit_csv"]:
        csv_path = out_dir / "series.csv"
        _write_csv(csv_path, ["piece", "mass", "c", "delta", "density_sup"],
                   [(i, p["mass"], p["c"], p["delta"], p["density_sup"])
                    for i, p in enumerate(piece_certs)])
        report.add_output(csv_path)
        if not config["no_plot"] and piece_certs:
            fig = out_dir / "series.png"
            plotting.save_xy(fig, [(i, p["mass"]) for i, p in enumerate(piece_certs)],
                             "piece", "mass", "series piece masses", logy=True)
            report.add_figure(fig)
    return report, failures


def run_divsolve(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    measure = fileio.read_measure(config["measure"])
    signed = as_signed(measure)
    box = signed.box
    level = config["grid"]
    field = dv.newtonian_field(signed, box, level)
    pos, _ = signed.parts()
    center = tuple(np.asarray(box.origin) + box.side / 2.0)
    margin = float(np.max(np.abs(pos - np.asarray(center)))) if pos.size else 0.0
    r_max = 0.49 * box.side
    radii = [margin + f * (r_max - margin) for f in (0.25, 0.6, 0.95)]
    fluxes = [dv.gauss_flux(signed, center, r) for r in radii]
    net = signed.net_mass
    rel = [abs(f - net) / max(abs(net), 1e-30) for f in fluxes]
    cert = {
        "net_mass": net,
        "radii": radii,
        "fluxes": fluxes,
        "flux_rel_errors": rel,
        "flux_ok": bool(all(r <= 5e-3 for r in rel)),
        "nudged": int(dv.snap_atoms_off_lattice(signed, box, level)[1]),
    }
    failures = [] if cert["flux_ok"] else ["flux_ok"]
    report.certify("divsolve", cert)
    stem = out_dir / "V"
    header, data = fileio.write_field(field, stem)
    report.add_output(header)
    report.add_output(data)
    if config["emit_csv"]:
        csv_path = out_dir / "flux.csv"
        _write_csv(csv_path, ["radius", "flux"], list(zip(radii, fluxes)))
        report.add_output(csv_path)
        if not config["no_plot"] and box.dim == 2:
            fig = out_dir / "V.png"
            plotting.save_field(fig, field, "|V| (Newtonian field)")
            report.add_figure(fig)
    return report, failures


def run_perturb(config: dict, out_dir: Path):
    report = RunReport(config)
    report.add_input(config["measure"])
    measure = fileio.read_measure(config["measure"])
    signed = as_signed(measure)
    box = signed.box
    schedule = _parse_schedule(config["schedule"]) if config.get("schedule") else [
        dc.ScheduleStep(delta=box.side / 4.0, eps=config["eps"] * 2.0),
        dc.ScheduleStep(delta=box.side / 8.0, eps=config["eps"] / 2.0),
        dc.ScheduleStep(delta=box.side / 16.0, eps=config["eps"] / 8.0),
    ]
    result = dv.l1_perturbation(signed, config["eps"], schedule, box, config["grid"],
                                alpha_scale=config.get("alpha_scale"))
    f_l1 = result.density_l1()
    gap = abs(f_l1 - result.tail_mass) / max(result.tail_mass, 1e-30) if result.tail_mass else f_l1
    cert = {
        "cutoff_j": result.cutoff,
        "piece_masses": result.piece_masses,
        "tail_mass": result.tail_mass,
        "tail_within_eps": bool(result.tail_mass <= config["eps"] * (1.0 + 1e-12)),
        "f_l1": f_l1,
        "f_l1_rel_gap": gap,
        "f_l1_matches_tail": bool(gap <= 1e-2),
        "alpha_sum": result.alpha_sum,
        "alpha_budget": result.alpha_budget,
        "alpha_within_budget": bool(result.alpha_sum <= result.alpha_budget * (1.0 + 1e-12)),
        "tail_pieces": [{"k": p.index, "mass": p.mass, "delta": p.delta, "alpha": p.alpha,
                         "defect": p.defect, "bound_met": p.bound_met} for p in result.tail_pieces],
        "modulus_table": result.modulus_table,
        "modulus_monotone": bool(all(a[1] <= b[1] for a, b in
                                     zip(result.modulus_table, result.modulus_table[1:]))),
        "nudged_atoms": result.nudged_atoms,
    }
    failures = [k for k in ("tail_within_eps", "f_l1_matches_tail", "alpha_within_budget",
                            "modulus_monotone") if not cert[k]]
    report.certify("perturb", cert)
    for name, field in (("V", result.field), ("f", result.density)):
        header, data = fileio.write_field(field, out_dir / name)
        report.add_output(header)
        report.add_output(data)
    if config["emit_csv"]:
        csv_path = out_dir / "modulus.csv"
        _write_csv(csv_path, ["distance", "oscillation"], list(result.modulus_table))
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "modulus.png"
            plotting.save_xy(fig, list(result.modulus_table), "distance", "max oscillation",
                             "continuity modulus of V", logx=True, logy=True)
            report.add_figure(fig)
    return report, failures


def run_charge_test(config: dict, out_dir: Path):
    report = RunReport(config)
    if config.get("field"):
        report.add_input(Path(config["field"]).with_suffix(".json"))
        report.add_input(Path(config["field"]).with_suffix(".f64"))
        target = fileio.read_field(config["field"])
        box = target.box
    else:
        report.add_input(config["measure"])
        target = fileio.read_measure(config["measure"])
        box = as_signed(target).box
    region = None
    if config.get("region"):
        report.add_input(config["region"])
        region = fileio.read_region(config["region"])
    rep = dv.charge_test(target, region, config["eps"], config["trials"], config["seed"],
                         box=box, ladder_steps=config["ladder_steps"])
    worst_replay = None
    if rep.worst:
        bump = dv.BumpSpec.from_dict(rep.worst["bump"])
        worst_replay = dv.required_constant(bump, target, rep.epsilon,
                                            rep.family["grid_norms"])["required_c"]
    cert = {
        "verdict": rep.verdict,
        "estimated_c": rep.estimated_c,
        "epsilon": rep.epsilon,
        "family": rep.family,
        "worst": rep.worst,
        "refuted_at_step": rep.refuted_at_step,
        "trials": rep.trials,
        "seed": rep.seed,
        "worst_replay_matches": bool(worst_replay is None
                                     or worst_replay == rep.worst.get("required_c")),
    }
    failures = [] if cert["worst_replay_matches"] else ["worst_replay_matches"]
    report.certify("charge_test", cert)
    if config["emit_csv"] and rep.worst:
        center = tuple(rep.worst["bump"]["center"])
        rows = []
        w0 = max(rep.worst["bump"]["widths"])
        for step in range(config["ladder_steps"]):
            w = w0 * 2.0**-step
            bump = dv.BumpSpec(center, (w,) * box.dim, 1.0)
            rec = dv.required_constant(bump, target, rep.epsilon, rep.family["grid_norms"])
            rows.append((step, w, rec["required_c"], rec["margin"]))
        csv_path = out_dir / "ladder.csv"
        _write_csv(csv_path, ["step", "width", "required_c", "margin"], rows)
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "ladder.png"
            plotting.save_xy(fig, [(r[1], max(r[2], 1e-18)) for r in rows], "bump width",
                             "required C", "shrinking-bump ladder", logx=True, logy=True)
            report.add_figure(fig)
    return report, failures


def run_demo_cantor(config: dict, out_dir: Path):
    report = RunReport(config)
    depth = config["depth"]
    region = cantor_region(depth)
    gauge = PowerLogGauge(s=1.0, beta=1.0) if config.get("gauge") is None \
        else fileio.read_gauge(config["gauge"])
    level = 2 * depth
    result = frostman_construct(region, gauge, level)
    content_value = ct.dyadic_content(region, gauge, math.inf, level).value
    witness = PowerGauge(1.0)  # codimension-one power gauge in the plane
    trend = ct.density_levels(result.measure, witness, range(1, level + 1))
    box = result.measure.box
    # the Frostman cap transports to mu(Q)/r_Q <= h(r_Q)/r_Q, which vanishes
    # with the scale; the attained plateau shrinks as the depth grows
    bounds = [(l, gauge(box.cube_radius(l)) / box.cube_radius(l)) for l, _ in trend]
    within = all(v <= b * (1.0 + 1e-9) for (_, v), (_, b) in zip(trend, bounds))
    cert = {
        "depth": depth,
        "leaf_level": level,
        "total_mass": result.total_mass,
        "cover_price": result.cover_price(gauge),
        "content_value": content_value,
        "mass_dominates_content": bool(result.total_mass >= content_value * (1.0 - 1e-12)),
        "density_trend": trend,
        "gauge_ratio_bound": bounds,
        "trend_within_gauge_ratio": bool(within),
        "density_plateau": max((v for _, v in trend), default=0.0),
    }
    failures = [k for k in ("mass_dominates_content", "trend_within_gauge_ratio")
                if not cert[k]]
    report.certify("demo_cantor", cert)
    mu_path = out_dir / "cantor_mu.json"
    fileio.write_measure(result.measure, mu_path)
    report.add_output(mu_path)
    region_path = out_dir / "cantor_region.json"
    fileio.write_region(region, region_path)
    report.add_output(region_path)
    if config["emit_csv"]:
        csv_path = out_dir / "cantor_trend.csv"
        _write_csv(csv_path, ["level", "max_density"], trend)
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "cantor_trend.png"
            plotting.save_xy(fig, trend, "level", "max mu(Q)/r_Q", "density trend vs codim-1 gauge",
                             logy=True)
            report.add_figure(fig)
            fig2 = out_dir / "cantor_atoms.png"
            plotting.save_atoms(fig2, result.measure, f"4-corner Cantor, depth {depth}")
            report.add_figure(fig2)
    return report, failures


def run_demo_ualpha(config: dict, out_dir: Path):
    report = RunReport(config)
    alpha = config["alpha"]
    level = config["grid"]
    box = Box((-0.25, -0.25), 0.5)
    u, f = dv.u_alpha_field(alpha, box, level, bump_radius=0.225)
    h = box.spacing(level)
    k_max = int(math.floor(math.log2(0.125 / (4.0 * h))))
    radii = [2.0 ** (-3 - k) for k in range(0, max(k_max, 0) + 1)]
    prof = dv.density_profile_plus(f, radii)
    cert = {
        "alpha": alpha,
        "u_at_origin_cell_bounded": bool(abs(u.values).max() <= 0.5 * box.side * math.sqrt(2)),
        "profile": prof,
        "first_over_last": prof[0][1] / prof[-1][1] if prof[-1][1] else math.inf,
    }
    report.certify("demo_ualpha", cert)
    for name, field in (("u", u), ("f_alpha", f)):
        header, data = fileio.write_field(field, out_dir / name)
        report.add_output(header)
        report.add_output(data)
    if config["emit_csv"]:
        csv_path = out_dir / "dr_profile.csv"
        _write_csv(csv_path, ["radius", "density"], prof)
        report.add_output(csv_path)
        if not config["no_plot"]:
            fig = out_dir / "dr_profile.png"
            plotting.save_xy(fig, prof, "radius", "D(r)", f"positive-part density, alpha={alpha}",
                             logx=True, logy=True)
            report.add_figure(fig)
    return report, []


def cantor_region(depth: int) -> Region:
    """4-corner Cantor iterate: keep the four corner subsquares of relative
    side 1/4 in each generation; generation g lives at level 2g."""
    cubes = [(0, 0)]
    level = 0
    for _ in range(depth):
        side = 4  # each generation refines by two dyadic levels
        nxt = []
        for (i, j) in cubes:
            base_i, base_j = side * i, side * j
            for di, dj in ((0, 0), (0, 3), (3, 0), (3, 3)):
                nxt.append((base_i + di, base_j + dj))
        cubes = nxt
        level += 2
    from .dyadic import DyadicCube
    return Region(2, [DyadicCube(level, idx) for idx in cubes])


RUNNERS = {
    "content": run_content,
    "density": run_density,
    "profile": run_profile,
    "frostman": run_frostman,
    "restrict": run_restrict,
    "calibrate": run_calibrate,
    "hahn": run_hahn,
    "series": run_series,
    "divsolve": run_divsolve,
    "perturb": run_perturb,
    "charge-test": run_charge_test,
    "demo-cantor": run_demo_cantor,
    "demo-ualpha": run_demo_ualpha,
}


def dispatch(config: dict) -> int:
    """Run the configured pipeline; returns the process exit code."""
    runner = RUNNERS.get(config["subcommand"])
    if runner is None:
        click.echo(f"error: unknown subcommand {config['subcommand']!r}", err=True)
        return 1
    out_dir = Path(config["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report, failures = runner(config, out_dir)
    except (ValueError, OSError, KeyError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return _finish(report, config, failures)


def verify_report(path) -> int:
    """Replay the embedded config and compare certificates and outputs."""
    try:
        report = load_report(path)
    except (OSError, ValueError) as exc:
        click.echo(f"error: cannot read report: {exc}", err=True)
        return 1
    config = report.get("config", {})
    if not config.get("subcommand"):
        click.echo("error: report carries no runnable config", err=True)
        return 1
    for inp, digest in report.get("inputs", {}).items():
        try:
            fresh = sha256_file(inp)
        except OSError:
            click.echo(f"verify: input {inp} missing", err=True)
            return 2
        if fresh != digest:
            click.echo(f"verify: input {inp} changed since the run", err=True)
            return 2
    runner = RUNNERS.get(config["subcommand"])
    with tempfile.TemporaryDirectory() as tmp:
        cfg = dict(config)
        cfg["out"] = tmp
        try:
            fresh_report, _ = runner(cfg, Path(tmp))
        except (ValueError, OSError, KeyError, RuntimeError) as exc:
            click.echo(f"error: replay failed: {exc}", err=True)
            return 1
        fresh_body = fresh_report.body()
    mismatches = []
    if canonical_json(fresh_body["certificates"]) != canonical_json(report.get("certificates", {})):
        mismatches.append("certificates")
        old, new = report.get("certificates", {}), fresh_body["certificates"]
        for key in sorted(set(old) | set(new)):
            if canonical_json(old.get(key)) != canonical_json(new.get(key)):
                click.echo(f"verify: certificate section {key!r} differs on replay", err=True)
    if fresh_body["outputs"] != report.get("outputs", {}):
        mismatches.append("outputs")
        click.echo("verify: output digests differ on replay", err=True)
    if mismatches:
        return 2
    click.echo("verify: ok")
    return 0


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Dyadic Hausdorff-content toolkit: measures, decompositions, fields."""


def _cfg(subcommand, out, seed, strict, emit_csv, no_plot, **kw) -> dict:
    cfg = {"subcommand": subcommand, "out": out, "seed": seed, "strict": strict,
           "emit_csv": emit_csv, "no_plot": no_plot}
    cfg.update(kw)
    if "GMTKIT_THREADS" in os.environ:
        # recorded for operators; never enters the report body
        pass
    return cfg


@main.command()
@click.option("--region", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--delta", default="inf", show_default=True)
@click.option("--max-level", default=12, show_default=True, type=int)
@_common
def content(region, gauge, delta, max_level, out, seed, strict, emit_csv, no_plot):
    """Exact dyadic content of a region with an optimal cover."""
    sys.exit(dispatch(_cfg("content", out, seed, strict, emit_csv, no_plot,
                           region=region, gauge=gauge, delta=delta, max_level=max_level)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--delta", default="inf", show_default=True)
@click.option("--levels", default="0:8", show_default=True, help="level range lo:hi")
@click.option("--shifted", is_flag=True, help="scan half-shifted grids too")
@_common
def density(measure, gauge, delta, levels, shifted, out, seed, strict, emit_csv, no_plot):
    """Per-level density maxima mu(Q)/h(r_Q)."""
    lo, hi = (int(x) for x in levels.split(":"))
    sys.exit(dispatch(_cfg("density", out, seed, strict, emit_csv, no_plot,
                           measure=measure, gauge=gauge, delta=delta, levels=[lo, hi],
                           shifted=shifted)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--delta", default="inf", show_default=True)
@click.option("--budgets", required=True, help="comma-separated content budgets")
@click.option("--max-level", default=8, show_default=True, type=int)
@_common
def profile(measure, gauge, delta, budgets, max_level, out, seed, strict, emit_csv, no_plot):
    """Concentration profile: capturable mass per content budget."""
    sys.exit(dispatch(_cfg("profile", out, seed, strict, emit_csv, no_plot,
                           measure=measure, gauge=gauge, delta=delta, budgets=budgets,
                           max_level=max_level)))


@main.command()
@click.option("--region", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--depth", required=True, type=int, help="leaf level of the construction")
@click.option("--measure-out", "measure_out", default=None, type=click.Path(),
              help="where to write the measure (default OUT/mu.json)")
@_common
def frostman(region, gauge, depth, measure_out, out, seed, strict, emit_csv, no_plot):
    """Constructive Frostman measure saturating the gauge caps."""
    sys.exit(dispatch(_cfg("frostman", out, seed, strict, emit_csv, no_plot,
                           region=region, gauge=gauge, depth=depth, measure_out=measure_out)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--c", required=True, type=float)
@click.option("--delta", default="inf", show_default=True)
@click.option("--max-level", default=8, show_default=True, type=int)
@_common
def restrict(measure, gauge, c, delta, max_level, out, seed, strict, emit_csv, no_plot):
    """Maximal restriction under the (c, delta) density caps."""
    sys.exit(dispatch(_cfg("restrict", out, seed, strict, emit_csv, no_plot,
                           measure=measure, gauge=gauge, c=c, delta=delta, max_level=max_level)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--eps", required=True, type=float)
@click.option("--delta", default="inf", show_default=True)
@click.option("--max-level", default=8, show_default=True, type=int)
@_common
def calibrate(measure, gauge, eps, delta, max_level, out, seed, strict, emit_csv, no_plot):
    """Smallest cap multiplier removing at most eps of the mass."""
    sys.exit(dispatch(_cfg("calibrate", out, seed, strict, emit_csv, no_plot,
                           measure=measure, gauge=gauge, eps=eps, delta=delta,
                           max_level=max_level)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--oracle", required=True,
              help="zero | counting:kappa | content-cap:c,delta")
@click.option("--gauge", default=None, type=click.Path(exists=True),
              help="needed by content-cap oracles")
@click.option("--theta", default=0.5, show_default=True, type=float)
@click.option("--search", default="exhaustive", show_default=True,
              type=click.Choice(["exhaustive", "cubes"]))
@click.option("--max-level", default=4, show_default=True, type=int)
@_common
def hahn(measure, oracle, gauge, theta, search, max_level, out, seed, strict, emit_csv, no_plot):
    """Greedy Hahn-type split against an outer-measure oracle."""
    sys.exit(dispatch(_cfg("hahn", out, seed, strict, emit_csv, no_plot,
                           measure=measure, oracle=oracle, gauge=gauge, theta=theta,
                           search=search, max_level=max_level)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--gauge", required=True, type=click.Path(exists=True))
@click.option("--schedule", required=True,
              help="steps 'delta,c,eps;...' with '-' for an absent entry")
@click.option("--max-level", default=8, show_default=True, type=int)
@_common
def series(measure, gauge, schedule, max_level, out, seed, strict, emit_csv, no_plot):
    """Series decomposition into density-certified pieces."""
    sys.exit(dispatch(_cfg("series", out, seed, strict, emit_csv, no_plot,
                           measure=measure, gauge=gauge, schedule=schedule,
                           max_level=max_level)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--grid", default=6, show_default=True, type=int, help="grid level")
@_common
def divsolve(measure, grid, out, seed, strict, emit_csv, no_plot):
    """Newtonian field solving div V = mu, with Gauss flux certificates."""
    sys.exit(dispatch(_cfg("divsolve", out, seed, strict, emit_csv, no_plot,
                           measure=measure, grid=grid)))


@main.command()
@click.option("--measure", required=True, type=click.Path(exists=True))
@click.option("--eps", required=True, type=float)
@click.option("--grid", default=6, show_default=True, type=int)
@click.option("--schedule", default=None, help="series schedule; sensible default otherwise")
@click.option("--alpha-scale", "alpha_scale", default=None, type=float,
              help="mollifier sup-error scale A in alpha_k = A 2^-k (default eps)")
@_common
def perturb(measure, eps, grid, schedule, alpha_scale, out, seed, strict, emit_csv, no_plot):
    """L1 perturbation mu = div V + f with ||f|| <= eps."""
    sys.exit(dispatch(_cfg("perturb", out, seed, strict, emit_csv, no_plot,
                           measure=measure, eps=eps, grid=grid, schedule=schedule,
                           alpha_scale=alpha_scale)))


@main.command("charge-test")
@click.option("--measure", default=None, type=click.Path(exists=True))
@click.option("--field", default=None, type=click.Path(),
              help="grid-field stem (header/raw sidecar)")
@click.option("--region", default=None, type=click.Path(exists=True))
@click.option("--eps", required=True, type=float)
@click.option("--trials", default=1000, show_default=True, type=int)
@click.option("--ladder-steps", default=20, show_default=True, type=int)
@_common
def charge_test_cmd(measure, field, region, eps, trials, ladder_steps, out, seed, strict,
                    emit_csv, no_plot):
    """Probe the charge inequality on a random bump family plus ladders."""
    if (measure is None) == (field is None):
        click.echo("error: give exactly one of --measure or --field", err=True)
        sys.exit(1)
    sys.exit(dispatch(_cfg("charge-test", out, seed, strict, emit_csv, no_plot,
                           measure=measure, field=field, region=region, eps=eps,
                           trials=trials, ladder_steps=ladder_steps)))


@main.group()
def demo():
    """Self-contained demonstration pipelines."""


@demo.command("cantor")
@click.option("--depth", default=6, show_default=True, type=int)
@click.option("--gauge", default=None, type=click.Path(exists=True),
              help="default: power_log(s=1, beta=1)")
@_common
def demo_cantor(depth, gauge, out, seed, strict, emit_csv, no_plot):
    """Frostman measure on the 4-corner Cantor set plus its density trend."""
    sys.exit(dispatch(_cfg("demo-cantor", out, seed, strict, emit_csv, no_plot,
                           depth=depth, gauge=gauge)))


@demo.command("ualpha")
@click.option("--alpha", default=1.5, show_default=True, type=float)
@click.option("--grid", default=10, show_default=True, type=int)
@_common
def demo_ualpha(alpha, grid, out, seed, strict, emit_csv, no_plot):
    """Oscillating u, f = div(u W), and the positive-part density profile."""
    sys.exit(dispatch(_cfg("demo-ualpha", out, seed, strict, emit_csv, no_plot,
                           alpha=alpha, grid=grid)))


@main.command()
@click.argument("report", type=click.Path(exists=True))
def verify(report):
    """Recompute a report's certificates and compare bit-exactly."""
    sys.exit(verify_report(report))


if __name__ == "__main__":
    main()
