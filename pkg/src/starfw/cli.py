"""Command-line interface: solve, benchmark, check and audit.

Exit codes: 0 success, 1 usage or spec error, 2 runtime/solver failure.
All outputs are reproducible given identical specs and seeds, except the
wall_time_ms field of report JSONs.
"""

import argparse
import concurrent.futures
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import StepsizeFailure
from .geometry import set_from_json
from .objectives import objective_from_json
from .solver import (
    RunReport,
    SolverConfig,
    TERMINATION_LINE_SEARCH,
    replay_bound_inputs,
    solve,
)
from .verify import (
    check_gradient,
    check_star_convexity,
    estimate_lipschitz,
    find_convexity_violation,
    run_audits,
)


def _default_seed() -> int:
    return int(os.environ.get("STARFW_SEED", "0"))


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {what} file '{path}': {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{what} file '{path}' is not valid JSON: {exc}") from exc


def _build_problem(spec: dict):
    if "objective" not in spec:
        raise ValueError("problem spec is missing key 'objective'")
    if "set" not in spec:
        raise ValueError("problem spec is missing key 'set'")
    return objective_from_json(spec["objective"]), set_from_json(spec["set"])


def _build_config(strategy: str, cfg: dict, seed_override=None) -> SolverConfig:
    config = SolverConfig.from_json_dict({**cfg, "strategy": strategy})
    if seed_override is not None:
        config.seed = seed_override
    elif "seed" not in cfg:
        config.seed = _default_seed()
    return config


def _summary_line(strategy: str, report: RunReport) -> str:
    last = report.records[-1]
    return (
        f"{strategy}: f={last.f_value:.9g} gap={last.gap:.3g} "
        f"iters={last.k} fevals={last.fevals_cum} -> {report.termination}"
    )


def cmd_run(args) -> int:
    spec = _load_json(args.spec, "spec")
    problem = spec.get("problem")
    if problem is None:
        raise ValueError("spec is missing key 'problem'")
    objective, feasible_set = _build_problem(problem)
    strategies = [args.strategy] if args.strategy else spec.get("strategies")
    if not strategies:
        raise ValueError("spec is missing key 'strategies' (or pass --strategy)")
    out_dir = Path(args.out if args.out else spec.get("out", "."))
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = dict(spec.get("config", {}))

    failed = False
    for strategy in strategies:
        config = _build_config(strategy, cfg, args.seed)
        report = solve(objective, feasible_set, config)
        report.write_trace_csv(out_dir / f"trace_{strategy}.csv")
        report.write_json(out_dir / f"report_{strategy}.json")
        print(_summary_line(strategy, report))
        if report.termination == TERMINATION_LINE_SEARCH:
            failed = True
    return 2 if failed else 0


def _first_k_below(report: RunReport, gap_tol: float):
    for rec in report.records:
        if abs(rec.gap) <= gap_tol:
            return rec.k
    return None


def _loglog_slope(report: RunReport, f_star):
    """Least-squares slope of log(f - f*) vs log k over the last decade."""
    if f_star is None:
        return None
    ks = report.ks()
    last_k = int(ks.max())
    lo = max(1, last_k // 10)
    mask = (ks >= lo) & (report.f_values() - f_star > 0.0)
    if int(mask.sum()) < 2:
        return None
    logk = np.log(ks[mask].astype(float))
    loga = np.log(report.f_values()[mask] - f_star)
    slope = np.polyfit(logk, loga, 1)[0]
    return float(slope)


def _bench_one(problem_spec: dict, strategy: str, shared_cfg: dict, seed_override):
    name = problem_spec.get("name", "problem")
    try:
        objective, feasible_set = _build_problem(problem_spec)
        cfg = {**shared_cfg, **problem_spec.get("config", {})}
        config = _build_config(strategy, cfg, seed_override)
        report = solve(objective, feasible_set, config)
        last = report.records[-1]
        if report.termination == TERMINATION_LINE_SEARCH:
            return [name, strategy, "", "", "", "", "failed:line_search_failure"]
        k_to_tol = _first_k_below(report, config.gap_tol)
        slope = _loglog_slope(report, objective.f_star)
        return [
            name,
            strategy,
            "" if k_to_tol is None else str(k_to_tol),
            format(last.gap, ".17g"),
            str(last.fevals_cum),
            "" if slope is None else format(slope, ".17g"),
            "ok",
        ]
    except (ValueError, StepsizeFailure) as exc:
        return [name, strategy, "", "", "", "", f"failed:{exc}"]


def cmd_bench(args) -> int:
    suite = _load_json(args.suite, "suite")
    problems = suite.get("problems") or []
    strategies = suite.get("strategies") or []
    if not problems or not strategies:
        raise ValueError("suite needs nonempty 'problems' and 'strategies'")
    shared_cfg = dict(suite.get("config", {}))
    workers = int(suite.get("workers", 1))
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(p, s) for p in problems for s in strategies]
    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda job: _bench_one(job[0], job[1], shared_cfg, args.seed), jobs)
            )
    else:
        rows = [_bench_one(p, s, shared_cfg, args.seed) for p, s in jobs]

    lines = ["problem,strategy,k_to_tol,final_gap,fevals,slope,status"]
    lines += [",".join(row) for row in rows]
    out_path = out_dir / "summary.csv"
    with open(out_path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {out_path} ({len(rows)} rows)")
    any_failed = any(not row[-1].startswith("ok") for row in rows)
    return 2 if any_failed else 0


def cmd_check(args) -> int:
    spec = _load_json(args.spec, "spec")
    objective, feasible_set = _build_problem(spec.get("problem", spec))
    n = args.samples
    seed = args.seed if args.seed is not None else _default_seed()

    if not objective.checker_only:
        fd_err = check_gradient(objective, feasible_set, n_points=min(100, n), seed=seed)
        print(f"gradient check: max relative error {fd_err:.3g} over "
              f"{min(100, n)} points -> {'PASS' if fd_err <= 1e-5 else 'FAIL'}")
        lip = estimate_lipschitz(objective, feasible_set, n_samples=n, seed=seed)
        print(f"lipschitz estimate: {lip:.6g} (lower estimate; inflate before trusting)")
        witness = find_convexity_violation(objective, feasible_set, n_samples=n, seed=seed)
        if witness is None:
            print(f"convexity: no gradient-inequality violation in {n} sampled pairs")
        else:
            print(f"convexity: witness found, violation {witness.violation:.6g} "
                  f"at x={witness.x.tolist()} y={witness.y.tolist()}")
    else:
        print("gradient/lipschitz/convexity checks skipped: objective is checker-only "
              "with singular gradients")

    x_star = objective.x_star
    if x_star is None:
        if args.star:
            print("star-convexity: FAIL (no declared minimizer; declare x_star)",
                  file=sys.stderr)
            return 1
        print("star-convexity: skipped (no declared minimizer)")
        return 0
    star = check_star_convexity(
        objective, feasible_set, x_star, n_samples=n, seed=seed
    )
    verdict = "PASS" if star.passed else "FAIL"
    print(f"star-convexity: {verdict} ({star.violation_count} violations over "
          f"{star.n_samples} samples x {star.n_lambdas} lambdas, "
          f"max excess {star.max_violation:.3g})")
    for x, lam, lhs, rhs in star.violations[:5]:
        print(f"  violation at lambda={lam:.4g} x={x.tolist()}: lhs={lhs:.9g} > rhs={rhs:.9g}")
    return 0 if star.passed else 1


def cmd_audit(args) -> int:
    report_path = Path(args.report)
    raw = _load_json(str(report_path), "report")
    try:
        report = RunReport.from_json_dict(raw)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"report file '{report_path}' is malformed: {exc}") from exc

    cfg = report.config
    l_estimate = None
    if cfg.get("l") is None:
        objective = objective_from_json(cfg["objective"])
        if objective.known_l is None:
            feasible_set = set_from_json(cfg["set"])
            l_estimate = 1.1 * estimate_lipschitz(
                objective, feasible_set, seed=int(cfg.get("seed", 0))
            )
            print(f"note: no declared L; using 10%-inflated sampled estimate {l_estimate:.6g}")
    constants = replay_bound_inputs(report, l_estimate=l_estimate)
    audits = run_audits(report, constants)

    all_passed = True
    entries = []
    for audit in audits:
        csv_path = report_path.with_name(f"{report_path.stem}_audit_{audit.bound_name}.csv")
        with open(csv_path, "w", newline="") as fh:
            fh.write(audit.pairs_csv_text())
        entries.append(audit.to_json_dict(details_csv_path=str(csv_path)))
        if audit.passed:
            print(f"{audit.bound_name}: PASS")
        else:
            print(f"{audit.bound_name}: FAIL (first violation at k={audit.first_violation_k})")
            all_passed = False

    raw["audits"] = entries
    with open(report_path, "w") as fh:
        json.dump(raw, fh, indent=2)
        fh.write("\n")
    return 0 if all_passed else 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starfw",
        description="Projection-free optimization over compact convex sets, "
                    "with star-convexity checks and rate audits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a problem spec and write traces")
    p_run.add_argument("--spec", required=True, help="problem spec JSON file")
    p_run.add_argument("--strategy", help="override the spec's strategy list")
    p_run.add_argument("--seed", type=int, help="override the spec's seed")
    p_run.add_argument("--out", help="output directory (default from spec or '.')")
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="run a suite and write summary.csv")
    p_bench.add_argument("--suite", required=True, help="suite JSON file")
    p_bench.add_argument("--seed", type=int, help="override seeds")
    p_bench.add_argument("--out", help="output directory (default '.')")
    p_bench.set_defaults(func=cmd_bench)

    p_check = sub.add_parser("check", help="run property checks on an objective/set pair")
    p_check.add_argument("--spec", required=True, help="problem spec JSON file")
    p_check.add_argument("--samples", type=int, default=10_000)
    p_check.add_argument("--seed", type=int)
    p_check.add_argument("--star", action="store_true",
                         help="fail when no minimizer is declared for the star check")
    p_check.set_defaults(func=cmd_check)

    p_audit = sub.add_parser("audit", help="audit rate bounds on a recorded run")
    p_audit.add_argument("--report", required=True, help="report JSON from 'run'")
    p_audit.set_defaults(func=cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except StepsizeFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())
