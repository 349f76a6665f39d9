"""Command line entry point: ``python -m dibrcast <command>``.

Commands
--------
analyze
    Tabulate the closed forms over the configured grids.
validate
    Run every oracle check; exit status 1 if any tolerance is breached.
simulate
    Run the MVGMP-vs-baseline simulation for each seed.
sweep
    As ``simulate`` for each value of one configuration key.

Exit status: 0 success, 1 failed check, 2 invalid configuration or
arguments, 3 infeasible scenario.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .analysis import (
    PeriodicZipfParams,
    alpha_without_dibr,
    asymptotic_alpha,
    asymptotic_alpha_periodic_zipf,
    asymptotic_alpha_periodic_zipf_printed,
    asymptotic_alpha_spaced,
    view_failure_probability,
)
from .config import Config, config_hash, dump_config, load_config, override
from .model import Client, ConfigurationError, ExplicitLossModel, TransmissionPlan
from .oracle import write_report
from .simulator import (
    RunResult,
    ScenarioInfeasible,
    confidence_interval,
    run_scenario,
    write_clients_csv,
    write_frames_csv,
)

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2, 3

log = logging.getLogger("dibrcast")

SUMMARY_METRICS = (
    "mvgmp_channel_time",
    "baseline_channel_time",
    "channel_time_ratio",
    "mvgmp_mean_failure",
    "baseline_mean_failure",
    "mean_alpha",
    "mean_active_clients",
    "infeasible_frames",
)


def _seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma separated integers, got {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _values(text: str) -> list[str]:
    values = [v.strip() for v in text.split(",") if v.strip()]
    if not values:
        raise argparse.ArgumentTypeError("at least one value is required")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with [model], [analysis], [simulator] sections")
    common.add_argument("--out", type=Path, default=Path("results"), help="output directory (default: results)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration value; repeatable")
    common.add_argument("-v", "--verbose", action="store_true", help="log protocol events")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seeds", type=_seeds, default=[0], help="comma separated seeds (default: 0)")
    seeded.add_argument("--jobs", type=int, default=1, help="worker processes for independent seeds")

    parser = argparse.ArgumentParser(prog="dibrcast", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="tabulate closed-form values")
    sub.add_parser("validate", parents=[common], help="closed forms vs. oracles")
    sub.add_parser("simulate", parents=[common, seeded], help="simulate MVGMP and the baseline")
    sweep = sub.add_parser("sweep", parents=[common, seeded], help="simulate over values of one key")
    sweep.add_argument("--param", required=True, help="configuration key to vary, e.g. simulator.arrival")
    sweep.add_argument("--values", type=_values, required=True, help="comma separated values")
    return parser


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------


def _fmt(v) -> str:
    return f"{v:.10g}" if isinstance(v, float) else str(v)


def _write_csv(path: Path, header: str, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _header(cfg: Config, seeds: Sequence[int] | None = None) -> str:
    h = f"config_hash={config_hash(cfg)}"
    if seeds is None:
        return f"{h} seed={cfg.scenario.seed}"
    return f"{h} seeds={','.join(map(str, seeds))}"


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------


def _boundary_plan(M: int, rate: float) -> TransmissionPlan:
    return TransmissionPlan({(v, 1, rate): 1 for v in range(1, M + 1)})


def cmd_analyze(cfg: Config, out: Path) -> int:
    a, sc = cfg.analysis, cfg.scenario
    header = _header(cfg)

    rows = [(p, R, asymptotic_alpha(p, R), alpha_without_dibr(p)) for p in a.loss_grid for R in a.quality_grid]
    _write_csv(out / "alpha.csv", header, ("p", "R", "alpha", "alpha_without_dibr"), rows)

    spaced = [
        (p, R, Rt, asymptotic_alpha_spaced(p, R, Rt))
        for p in a.loss_grid
        for R in a.quality_grid
        for Rt in a.spacing_grid
        if Rt <= R
    ]
    _write_csv(out / "spaced.csv", header, ("p", "R", "R_tilde", "alpha"), spaced)

    zipf = []
    for m, s, p in a.zipf:
        params = PeriodicZipfParams.with_peak(m, s, p, a.zipf_peak)
        for R in a.quality_grid:
            zipf.append(
                (m, s, params.c, p, R, asymptotic_alpha_periodic_zipf(params, R), asymptotic_alpha_periodic_zipf_printed(params, R))
            )
    _write_csv(out / "zipf.csv", header, ("m", "s", "c", "p_success", "R", "alpha", "alpha_printed_form"), zipf)

    # every view multicast once on one channel at the lowest rate, uniform loss p
    rate = sc.rates[0]
    client = Client(0, frozenset({1}), frozenset({rate}))
    failure = []
    for p in a.loss_grid:
        model = ExplicitLossModel.uniform(p)
        for R in a.quality_grid:
            plan = _boundary_plan(sc.views, rate)
            for k in range(1, sc.views + 1):
                failure.append((sc.views, R, k, p, view_failure_probability(client, k, plan, model, sc.views, R)))
    _write_csv(out / "failure.csv", header, ("M", "R", "desired", "view_loss", "failure"), failure)

    print("p      R  alpha      without DIBR")
    for p, R, alpha, plain in rows:
        print(f"{p:<6g} {R:<2d} {alpha:.6f}   {plain:.6f}")
    print(f"wrote alpha.csv, spaced.csv, zipf.csv, failure.csv to {out}")
    return EXIT_OK


# --------------------------------------------------------------------------
# validate
# --------------------------------------------------------------------------


def cmd_validate(cfg: Config, out: Path) -> int:
    from .validation import full_suite

    rows = full_suite(cfg.analysis)
    write_report(rows, out / "validation.csv", _header(cfg, [cfg.analysis.seed]))
    failed = [r for r in rows if not r.passed]
    by_kind: dict[str, list] = {}
    for r in rows:
        by_kind.setdefault(r.kind, []).append(r)
    for kind, group in by_kind.items():
        worst = max(r.delta for r in group)
        scored = [r for r in group if r.tolerance is not None]
        status = "report" if not scored else ("pass" if all(r.passed for r in scored) else "FAIL")
        print(f"{kind:<14} {len(group):5d} rows  max |delta| {worst:.3e}  {status}")
    for r in failed:
        print(f"FAIL {r.kind} {r.instance}: closed form {r.closed_form:.12g} oracle {r.oracle:.12g}")
    print(f"wrote {out / 'validation.csv'}")
    return EXIT_FAILED if failed else EXIT_OK


# --------------------------------------------------------------------------
# simulate / sweep
# --------------------------------------------------------------------------


def _run_one(cfg: Config) -> RunResult:
    return run_scenario(cfg.scenario)


def _run_seeds(cfg: Config, seeds: Sequence[int], jobs: int) -> list[RunResult]:
    configs = [cfg.with_seed(s) for s in seeds]
    if jobs > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, configs))
    return [_run_one(c) for c in configs]


def _write_runs(results: Sequence[RunResult], cfg: Config, out: Path) -> None:
    for res in results:
        seeded = cfg.with_seed(res.config.seed)
        write_frames_csv(res, out / f"frames_seed{res.config.seed}.csv", _header(seeded))
        write_clients_csv(res, out / f"clients_seed{res.config.seed}.csv", _header(seeded))


def _summary_rows(results: Sequence[RunResult]) -> list[tuple]:
    rows = []
    for metric in SUMMARY_METRICS:
        mean, half = confidence_interval([r.summary()[metric] for r in results])
        rows.append((metric, mean, half, len(results)))
    return rows


def cmd_simulate(cfg: Config, out: Path, seeds: Sequence[int], jobs: int) -> int:
    results = _run_seeds(cfg, seeds, jobs)
    _write_runs(results, cfg, out)
    rows = _summary_rows(results)
    _write_csv(out / "summary.csv", _header(cfg, seeds), ("metric", "mean", "ci95", "seeds"), rows)
    for metric, mean, half, _ in rows:
        print(f"{metric:<24} {mean:12.6f} +/- {half:.6f}")
    return EXIT_OK


SWEEP_SCHEMES = (("mvgmp", "mvgmp_channel_time", "mvgmp_mean_failure"), ("baseline", "baseline_channel_time", "baseline_mean_failure"))


def cmd_sweep(cfg: Config, out: Path, seeds: Sequence[int], jobs: int, param: str, values: Sequence[str]) -> int:
    points = [(value, override(cfg, param, value)) for value in values]
    rows = []
    for value, point in points:
        sub = out / f"{param.split('.')[-1]}={value}"
        sub.mkdir(parents=True, exist_ok=True)
        results = _run_seeds(point, seeds, jobs)
        _write_runs(results, point, sub)
        for scheme, ct_key, f_key in SWEEP_SCHEMES:
            ct, ct_h = confidence_interval([r.summary()[ct_key] for r in results])
            f, f_h = confidence_interval([r.summary()[f_key] for r in results])
            rows.append((param, value, scheme, ct, ct_h, f, f_h, len(results)))
            print(f"{param}={value:<8} {scheme:<9} channel time {ct:9.4f} +/- {ct_h:.4f} ms")
    columns = ("param", "value", "scheme", "channel_time_ms", "channel_time_ci95", "mean_failure", "mean_failure_ci95", "seeds")
    _write_csv(out / "sweep.csv", _header(cfg, seeds), columns, rows)
    return EXIT_OK


# --------------------------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "sweep":
            for value in args.values:
                override(cfg, args.param, value)
        if getattr(args, "jobs", 1) < 1:
            raise ConfigurationError("--jobs must be >= 1")
    except ConfigurationError as exc:
        print(f"dibrcast: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"dibrcast: cannot create output directory {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_CONFIG
    (args.out / "config.ini").write_text(f"# config_hash={config_hash(cfg)}\n" + dump_config(cfg))

    try:
        if args.command == "analyze":
            return cmd_analyze(cfg, args.out)
        if args.command == "validate":
            return cmd_validate(cfg, args.out)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out, args.seeds, args.jobs)
        return cmd_sweep(cfg, args.out, args.seeds, args.jobs, args.param, args.values)
    except ConfigurationError as exc:
        print(f"dibrcast: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioInfeasible as exc:
        print(f"dibrcast: infeasible scenario: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
