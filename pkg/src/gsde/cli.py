"""Command-line front end: simulate, verify, and capacity subcommands.

Exit codes are a stable contract for CI use: 0 for success or PASS, 1 when a
verification check fails, 2 for configuration or parse errors.  All
randomness flows from the --seed flag, so equal configurations produce
byte-identical summary documents.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures, report
from .casebook import CaseBundle, get_case
from .config import (
    OUT_DIR_ENV,
    RunConfig,
    apply_overrides,
    load_config_file,
    parse_config,
)
from .diagnostics import capacity, convergence_report
from .engine import DEFAULT_EXPLODE_RADIUS, simulate_batch
from .errors import ConfigurationError, DomainError, GsdeError
from .events import parse_event
from .lyapunov import (
    ShellRegion,
    check_generator_bound,
    check_radial_unboundedness,
    exponential_certificate,
)
from .scenarios import generate_family

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsde",
        description=(
            "Simulate SDEs driven by uncertain-volatility noise, verify"
            " Lyapunov conditions, and estimate worst-case probabilities."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", help="preset case name (example1/example2/example3)")
    common.add_argument("--config", help="YAML/JSON config file")
    common.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./gsde_out)")
    common.add_argument("--seed", type=int, help="base seed for all randomness")
    common.add_argument("--trials", type=int, help="Monte Carlo trials per scenario")
    common.add_argument("--T", type=float, help="time horizon")
    common.add_argument("--dt", type=float, help="time step")
    common.add_argument("--grid-k", type=int, help="variance-grid resolution")
    common.add_argument(
        "--scenario-mode",
        choices=["constant", "piecewise_random", "endpoints"],
        help="scenario generation mode",
    )
    common.add_argument("--record-stride", type=int, help="state recording stride")
    common.add_argument("--tolerance", type=float, help="verification tolerance")
    common.add_argument(
        "--lambda",
        dest="verify_lambda",
        type=float,
        help="decay-rate parameter for the exponential certificate",
    )
    common.add_argument("--samples", type=int, help="verification sample count")
    common.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    sub.add_parser("simulate", parents=[common], help="run a scenario batch and export it")
    sub.add_parser("verify", parents=[common], help="check the Lyapunov conditions")
    cap = sub.add_parser(
        "capacity", parents=[common], help="worst-case probability of an event"
    )
    cap.add_argument(
        "--event",
        required=True,
        help="event expression, e.g. '|x(T)| > 1 and min|x(t)| <= 0.5'",
    )
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = parse_config(load_config_file(args.config)) if args.config else RunConfig()
    return apply_overrides(
        cfg,
        case=args.case,
        trials=args.trials,
        T=args.T,
        dt=args.dt,
        grid_k=args.grid_k,
        seed=args.seed,
        scenario_mode=args.scenario_mode,
        record_stride=args.record_stride,
        tolerance=args.tolerance,
        verify_lambda=args.verify_lambda,
        n_samples=args.samples,
        out_dir=Path(args.out) if args.out else None,
        figures=False if args.no_figures else None,
    )


def _require_case(cfg: RunConfig) -> CaseBundle:
    if cfg.case is None:
        raise ConfigurationError("a --case (or config 'case' key) is required")
    return get_case(cfg.case, **cfg.case_params)


def _auto_stride(n_steps: int) -> int:
    target = max(1, n_steps // 1000)
    for s in range(target, 0, -1):
        if n_steps % s == 0:
            return s
    return 1


def _run_batch(cfg: RunConfig, bundle: CaseBundle):
    proto = bundle.protocol
    T = cfg.T if cfg.T is not None else proto.T
    dt = cfg.dt if cfg.dt is not None else proto.dt
    trials = cfg.trials if cfg.trials is not None else proto.trials
    grid_k = cfg.grid_k if cfg.grid_k is not None else proto.grid_k
    mode = cfg.scenario_mode if cfg.scenario_mode is not None else proto.scenario_mode
    n_steps = int(round(T / dt))
    if n_steps < 1:
        raise ConfigurationError(f"horizon T={T} is shorter than one step dt={dt}")
    u = cfg.uncertainty if cfg.uncertainty is not None else bundle.uncertainty
    family = generate_family(
        u,
        n_steps=n_steps,
        dt=dt,
        grid_k=grid_k,
        mode=mode,
        n_scenarios=cfg.scenario_count,
        seed=cfg.scenario_seed,
    )
    stride = cfg.record_stride if cfg.record_stride is not None else _auto_stride(n_steps)
    if n_steps % stride != 0:
        raise ConfigurationError(
            f"record_stride {stride} does not divide n_steps {n_steps}"
        )
    batch = simulate_batch(
        bundle.system,
        family,
        bundle.x0_sampler(),
        n_trials_per_scenario=trials,
        base_seed=cfg.seed,
        explode_radius=(
            cfg.explode_radius if cfg.explode_radius is not None else DEFAULT_EXPLODE_RADIUS
        ),
        record_stride=stride,
    )
    resolved = {
        "T": T,
        "dt": dt,
        "trials": trials,
        "grid_k": grid_k,
        "scenario_mode": mode,
        "n_steps": n_steps,
        "record_stride": stride,
        "seed": cfg.seed,
        "scenario_seed": cfg.scenario_seed,
        "scenario_count": cfg.scenario_count,
        "uncertainty": u.to_config(),
        "case": bundle.name,
        "case_params": {k: bundle.params[k] for k in sorted(bundle.params)},
        "x0_radius": proto.x0_radius,
    }
    return batch, family, resolved


def cmd_simulate(cfg: RunConfig) -> int:
    bundle = _require_case(cfg)
    batch, family, resolved = _run_batch(cfg, bundle)
    conv = convergence_report(batch, bundle.lyapunov)
    out = cfg.out_dir
    summary = report.batch_summary(
        batch, family, resolved, convergence=conv, case=bundle.name
    )
    report.write_summary(out / "summary.json", summary)
    report.write_summary(out / "scenario_manifest.json", family.to_manifest())
    by_scenario = {}
    for tr in batch:
        by_scenario.setdefault(tr.scenario_id, []).append(tr)
    scen_by_id = {s.id: s for s in family}
    for sid, trajs in sorted(by_scenario.items()):
        report.write_trajectories_csv(
            out / f"trajectories_s{sid}.csv", trajs, scen_by_id[sid]
        )
    report.write_metrics_csv(out / "trajectory_metrics.csv", conv)
    times, labels, matrix, scenario_ids = report.lognorm_table(batch)
    report.write_lognorm_csv(out / "lognorm_vs_time.csv", times, labels, matrix)
    if cfg.figures:
        figures.render_lognorm(
            out / "fig_lognorm.png",
            times,
            matrix,
            scenario_ids,
            title=f"{bundle.name}: log|x(t)| across {len(batch)} trajectories",
        )
    reasons = summary["stop_reasons"]
    print(f"case {bundle.name}: {len(batch)} trajectories over {len(family)} scenarios")
    print(f"stop reasons: {reasons}")
    print(f"max pathwise exponent: {conv.max_exponent:.6g}")
    print(f"wrote {out}/summary.json")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    bundle = _require_case(cfg)
    u = cfg.uncertainty if cfg.uncertainty is not None else bundle.uncertainty
    tol = cfg.tolerance if cfg.tolerance is not None else bundle.tolerance
    region = ShellRegion(
        r_lo=cfg.r_lo if cfg.r_lo is not None else bundle.region.r_lo,
        r_hi=cfg.r_hi if cfg.r_hi is not None else bundle.region.r_hi,
        n_samples=cfg.n_samples if cfg.n_samples is not None else bundle.region.n_samples,
        seed=cfg.verify_seed if cfg.verify_seed is not None else bundle.region.seed,
    )
    gen = check_generator_bound(
        bundle.system, bundle.lyapunov, u, region, tolerance=tol
    )
    print(
        f"generator bound: {'PASS' if gen.passed else 'FAIL'}"
        f" (worst margin {gen.worst_margin:.6g}, tolerance {tol:g},"
        f" {gen.n_samples} samples)"
    )
    radii = [region.effective_r_lo, region.r_hi, 10 * region.r_hi, 100 * region.r_hi]
    radial = check_radial_unboundedness(
        bundle.lyapunov, radii, d=bundle.system.d, seed=region.seed
    )
    print(f"radial unboundedness (heuristic): {'PASS' if radial else 'FAIL'}")
    cert = None
    lam = cfg.verify_lambda if cfg.verify_lambda is not None else bundle.exp_lambda
    if lam is not None:
        espec = bundle.exponential_spec(lam)
        cert = exponential_certificate(
            bundle.system,
            espec,
            u,
            decay_lambda=lam,
            moment_p=bundle.exp_p,
            region=region,
            tolerance=tol,
        )
        if cert.passed:
            print(
                f"exponential certificate: PASS, certified rate {cert.rate:.6g}"
                f" (lambda {lam:g}, p {bundle.exp_p:g})"
            )
        else:
            print(
                f"exponential certificate: FAIL (lower-bound margin"
                f" {cert.worst_lower_margin:.6g}, generator margin"
                f" {cert.worst_generator_margin:.6g})"
            )
    ok = gen.passed and radial and (cert is None or cert.passed)
    out = cfg.out_dir
    doc = {
        "kind": "verify_report",
        "case": bundle.name,
        "tolerance": tol,
        "generator_bound": gen.to_summary(),
        "radial_unboundedness": {"passed": bool(radial), "heuristic": True},
        "exponential_certificate": None if cert is None else cert.to_summary(),
        "passed": bool(ok),
    }
    report.write_summary(out / "verify_report.json", doc)
    report.write_margins_csv(out / "margins.csv", gen.points, gen.margins)
    if cfg.figures:
        figures.render_margins(
            out / "fig_margins.png",
            gen.points,
            gen.margins,
            tol,
            title=f"{bundle.name}: generator-bound margins",
        )
    print(f"wrote {out}/verify_report.json")
    return EXIT_OK if ok else EXIT_VERIFY_FAIL


def cmd_capacity(cfg: RunConfig, event_text: str) -> int:
    event = parse_event(event_text)
    bundle = _require_case(cfg)
    batch, family, resolved = _run_batch(cfg, bundle)
    est = capacity(event.predicate, batch, description=event.description)
    print(f"event: {est.event}")
    print(f"{'scenario':>9} {'probability':>12} {'wilson_low':>11} {'wilson_high':>12} {'n':>6}")
    for row in est.per_scenario:
        print(
            f"{row.scenario_id:>9d} {row.probability:>12.6f}"
            f" {row.wilson_low:>11.6f} {row.wilson_high:>12.6f} {row.n:>6d}"
        )
    print(f"capacity (supremum over family): {est.supremum:.6f}")
    print(f"note: {est.caveat}")
    doc = {
        "kind": "capacity_estimate",
        "case": bundle.name,
        "config": resolved,
        "event": est.event,
        "supremum": est.supremum,
        "family_size": est.family_size,
        "per_scenario": [
            {
                "scenario_id": r.scenario_id,
                "probability": r.probability,
                "wilson_low": r.wilson_low,
                "wilson_high": r.wilson_high,
                "n": r.n,
            }
            for r in est.per_scenario
        ],
        "caveat": est.caveat,
    }
    report.write_summary(cfg.out_dir / "capacity.json", doc)
    print(f"wrote {cfg.out_dir}/capacity.json")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "capacity":
            return cmd_capacity(cfg, args.event)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except (ConfigurationError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except GsdeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
