"""Conditional-gradient main loop with full trace recording.

A solve is strictly sequential; re-entrancy across runs is safe because
objectives, sets and configs are never mutated.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CheckerOnlyError,
    DimensionMismatchError,
    InfeasiblePointError,
    MissingConstantError,
    StepsizeFailure,
)
from .geometry import set_from_json
from .objectives import objective_from_json
from .stepsizes import StepContext, build_strategy

TERMINATION_GAP = "gap_tol_reached"
TERMINATION_MAX_ITERS = "max_iters"
TERMINATION_LINE_SEARCH = "line_search_failure"

_CSV_HEADER = "k,f,gap,lambda,L_est,fevals_iter,fevals_cum"


@dataclass
class SolverConfig:
    strategy: str = "armijo"
    max_iters: int = 1000
    gap_tol: float = 1e-8
    feasibility_tol: float = 1e-9
    zeta: float = 0.1
    beta: float = 0.5
    l0: float = 1.0
    l: float | None = None
    seed: int = 0
    x0: np.ndarray | None = None

    def validate(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.gap_tol < 0 or self.feasibility_tol < 0:
            raise ValueError("tolerances must be nonnegative")

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "max_iters": self.max_iters,
            "gap_tol": self.gap_tol,
            "feasibility_tol": self.feasibility_tol,
            "zeta": self.zeta,
            "beta": self.beta,
            "l0": self.l0,
            "l": self.l,
            "seed": self.seed,
            "x0": None if self.x0 is None else np.asarray(self.x0, dtype=float).tolist(),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SolverConfig":
        known = {f for f in cls.__dataclass_fields__}
        kwargs = {k: v for k, v in d.items() if k in known}
        if kwargs.get("x0") is not None:
            kwargs["x0"] = np.asarray(kwargs["x0"], dtype=float)
        return cls(**kwargs)


@dataclass
class IterationRecord:
    """One row of the solve trace."""

    k: int
    f_value: float
    gap: float  # clamped to <= 0
    lam: float | None = None
    l_estimate: float | None = None
    fevals_iter: int = 0
    fevals_cum: int = 0

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "f": self.f_value,
            "gap": self.gap,
            "lambda": self.lam,
            "L_est": self.l_estimate,
            "fevals_iter": self.fevals_iter,
            "fevals_cum": self.fevals_cum,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "IterationRecord":
        return cls(
            k=int(d["k"]),
            f_value=float(d["f"]),
            gap=float(d["gap"]),
            lam=None if d.get("lambda") is None else float(d["lambda"]),
            l_estimate=None if d.get("L_est") is None else float(d["L_est"]),
            fevals_iter=int(d["fevals_iter"]),
            fevals_cum=int(d["fevals_cum"]),
        )


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return format(float(v), ".17g")


@dataclass
class RunReport:
    """Complete record of one solve: configuration, trace and outcome."""

    config: dict
    records: list[IterationRecord]
    final_x: np.ndarray
    termination: str
    wall_time_s: float
    audits: list = field(default_factory=list)

    def ks(self) -> np.ndarray:
        return np.array([r.k for r in self.records])

    def f_values(self) -> np.ndarray:
        return np.array([r.f_value for r in self.records])

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.records])

    def lambdas(self) -> list:
        return [r.lam for r in self.records]

    def l_estimates(self) -> list:
        return [r.l_estimate for r in self.records]

    def trace_csv_text(self) -> str:
        lines = [_CSV_HEADER]
        for r in self.records:
            lines.append(
                ",".join([
                    str(r.k),
                    _fmt(r.f_value),
                    _fmt(r.gap),
                    _fmt(r.lam),
                    _fmt(r.l_estimate),
                    str(r.fevals_iter),
                    str(r.fevals_cum),
                ])
            )
        return "\n".join(lines) + "\n"

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.trace_csv_text())

    def to_json_dict(self) -> dict:
        out = {
            "config": self.config,
            "termination": self.termination,
            "final_x": np.asarray(self.final_x, dtype=float).tolist(),
            "wall_time_ms": self.wall_time_s * 1e3,
            "records": [r.to_json_dict() for r in self.records],
        }
        if self.audits:
            out["audits"] = self.audits
        return out

    def write_json(self, path):
        import json

        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, d: dict) -> "RunReport":
        return cls(
            config=d["config"],
            records=[IterationRecord.from_json_dict(r) for r in d["records"]],
            final_x=np.asarray(d["final_x"], dtype=float),
            termination=d["termination"],
            wall_time_s=float(d.get("wall_time_ms", 0.0)) / 1e3,
            audits=list(d.get("audits", [])),
        )


def gap(objective, feasible_set, x, feasibility_tol: float = 1e-9):
    """Duality gap at ``x``: the oracle point p and grad(x) @ (p - x).

    The returned scalar is nonpositive up to rounding of order 1e-12; callers
    that record it clamp to <= 0.
    """
    x = np.asarray(x, dtype=float)
    if not feasible_set.contains(x, feasibility_tol):
        raise InfeasiblePointError("gap requested at an infeasible point")
    g = objective.gradient(x)
    p = feasible_set.lmo(g)
    return float(g @ (p - x)), p


def solve(objective, feasible_set, config: SolverConfig) -> RunReport:
    """Minimize ``objective`` over ``feasible_set`` by conditional gradient.

    Parameters
    ----------
    objective : Objective
        Must not be checker-only.
    feasible_set : FeasibleSet
        Provides the linear minimization oracle.
    config : SolverConfig
        Strategy selection, tolerances, seed and optional start point.

    Returns
    -------
    RunReport
        One record per iteration (including k = 0), the final iterate, a
        termination reason and the wall time.  Stepsize-search failures end
        the run with a partial trace instead of raising.
    """
    config.validate()
    if objective.checker_only:
        raise CheckerOnlyError("objective is checker-only and cannot be solved")
    if objective.dim != feasible_set.dim:
        raise DimensionMismatchError(
            f"objective dimension {objective.dim} != set dimension {feasible_set.dim}"
        )

    if config.x0 is not None:
        x = np.asarray(config.x0, dtype=float).copy()
        if not feasible_set.contains(x, config.feasibility_tol):
            raise InfeasiblePointError("x0 is not feasible within feasibility_tol")
    else:
        x = feasible_set.sample(config.seed)

    l_for_rule = config.l if config.l is not None else objective.known_l
    strategy = build_strategy(
        config.strategy, zeta=config.zeta, beta=config.beta, l0=config.l0, l=l_for_rule
    )

    records: list[IterationRecord] = []
    fevals_cum = 0
    f_x = objective.value(x)
    termination = None
    t0 = time.perf_counter()

    for k in range(config.max_iters + 1):
        if not feasible_set.contains(x, config.feasibility_tol):
            raise InfeasiblePointError(f"iterate at k={k} left the feasible set")
        g = objective.gradient(x)
        p = feasible_set.lmo(g)
        d = p - x
        omega = min(float(g @ d), 0.0)
        rec = IterationRecord(
            k=k,
            f_value=f_x,
            gap=omega,
            l_estimate=getattr(strategy, "l_current", None),
            fevals_cum=fevals_cum,
        )
        records.append(rec)

        if -omega <= config.gap_tol:
            termination = TERMINATION_GAP
            break
        d_norm_sq = float(d @ d)
        if d_norm_sq == 0.0:
            # a zero direction forces a zero gap analytically; any positive
            # |gap| left over here is floating-point noise
            termination = TERMINATION_GAP
            break
        if k == config.max_iters:
            termination = TERMINATION_MAX_ITERS
            break

        ctx = StepContext(
            x=x, d=d, gap=omega, k=k, objective=objective, f_x=f_x, d_norm_sq=d_norm_sq
        )
        try:
            step = strategy.step(ctx)
        except StepsizeFailure:
            termination = TERMINATION_LINE_SEARCH
            break
        rec.lam = step.lam
        rec.fevals_iter = step.f_evals
        fevals_cum += step.f_evals
        rec.fevals_cum = fevals_cum

        if step.x_next is not None:
            x = step.x_next
            f_x = step.f_next
        else:
            x = x + step.lam * d
            f_x = objective.value(x)

    wall = time.perf_counter() - t0
    cfg = config.to_json_dict()
    cfg["objective"] = objective.to_json()
    cfg["set"] = feasible_set.to_json()
    return RunReport(
        config=cfg,
        records=records,
        final_x=x.copy(),
        termination=termination,
        wall_time_s=wall,
    )


@dataclass
class BoundConstants:
    """Problem constants the bound audits consume."""

    diam: float
    l: float | None
    l0: float
    zeta: float
    beta: float
    rho: float | None = None
    gamma: float | None = None
    f_star: float | None = None


def gamma_constant(rho: float, diam: float, l: float, zeta: float, beta: float) -> float:
    """Stepsize-floor coefficient for the backtracking rule.

    min(1 / (rho * diam), 2 * beta * (1 - zeta) / (l * diam^2)): the first
    term covers full steps, the second comes from the level at which the
    sufficient-decrease test last failed (one shrink above the accepted
    step).
    """
    return min(1.0 / (rho * diam), 2.0 * beta * (1.0 - zeta) / (l * diam * diam))


def replay_bound_inputs(report: RunReport, l_estimate: float | None = None,
                        n_samples: int = 10_000) -> BoundConstants:
    """Recover the constants the audits need from a finished run.

    ``l`` resolves from the run config, then the objective's declared
    constant, then the caller-supplied estimate.  For backtracking runs the
    gradient-norm bound ``rho`` is sampled over the feasible set (seeded by
    the run's seed) and inflated by 10%, which only loosens the audited
    bounds.  Diminishing runs report no gamma; it does not apply.
    """
    cfg = report.config
    objective = objective_from_json(cfg["objective"])
    feasible_set = set_from_json(cfg["set"])
    diam = feasible_set.diameter()
    zeta = float(cfg.get("zeta", 0.1))
    beta = float(cfg.get("beta", 0.5))
    l0 = float(cfg.get("l0", 1.0))
    l = cfg.get("l")
    if l is None:
        l = objective.known_l
    if l is None:
        l = l_estimate
    if l is None:
        raise MissingConstantError(
            "no Lipschitz constant available: declare one in the config or the "
            "objective, or pass an estimate (e.g. 1.1 * estimate_lipschitz(...))"
        )
    l = float(l)
    rho = None
    gamma = None
    if cfg.get("strategy") == "armijo":
        from .verify import estimate_gradient_sup

        rho = 1.1 * estimate_gradient_sup(
            objective, feasible_set, n_samples=n_samples, seed=int(cfg.get("seed", 0))
        )
        gamma = gamma_constant(rho, diam, l, zeta, beta)
    return BoundConstants(
        diam=diam,
        l=l,
        l0=l0,
        zeta=zeta,
        beta=beta,
        rho=rho,
        gamma=gamma,
        f_star=objective.f_star,
    )
