"""Executable checks: star-convexity sampling, convexity witnesses, constant
estimation, and mechanical audits of convergence-rate bounds on recorded runs.

Every checker and audit is a pure function of its inputs; samplers take
explicit seeds, so identical calls give identical verdicts.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasiblePointError
from .solver import BoundConstants, RunReport

_CHUNK = 512  # fixed sampling chunk so estimates are prefix-stable in n


@dataclass
class StarConvexityReport:
    """Outcome of sampling the secant inequality against a claimed minimizer."""

    n_samples: int
    n_lambdas: int
    tol: float
    violation_count: int
    violations: list  # up to a cap of (x, lam, lhs, rhs) tuples
    max_violation: float

    @property
    def passed(self) -> bool:
        return self.violation_count == 0


@dataclass
class ConvexityWitness:
    """A sampled pair violating the gradient inequality of convex functions."""

    x: np.ndarray
    y: np.ndarray
    violation: float


@dataclass
class BoundAuditReport:
    """Per-iteration comparison of an observed quantity against a bound."""

    bound_name: str
    passed: bool
    first_violation_k: int | None
    pairs: list  # (k, observed, bound)
    details: dict = field(default_factory=dict)

    def to_json_dict(self, details_csv_path: str | None = None) -> dict:
        return {
            "name": self.bound_name,
            "passed": self.passed,
            "first_violation_k": self.first_violation_k,
            "details_csv_path": details_csv_path,
        }

    def pairs_csv_text(self) -> str:
        lines = ["k,observed,bound"]
        for k, observed, bound in self.pairs:
            lines.append(f"{k},{observed:.17g},{bound:.17g}")
        return "\n".join(lines) + "\n"


def _chunk_seeds(seed: int, n_chunks: int):
    return np.random.SeedSequence(seed).spawn(n_chunks)


def _sample_chunked(feasible_set, n: int, seed: int) -> np.ndarray:
    """Sample n feasible points in fixed-size chunks.

    Chunking makes the first n points independent of the total count, so
    running maxima over them are monotone in n for a fixed seed.
    """
    n_chunks = -(-n // _CHUNK)
    seeds = _chunk_seeds(seed, n_chunks)
    parts = [feasible_set.sample_batch(_CHUNK, s) for s in seeds]
    return np.vstack(parts)[:n]


def check_star_convexity(objective, feasible_set, x_star=None, n_samples: int = 10_000,
                         n_lambdas: int = 101, tol: float = 1e-9, seed: int = 0,
                         max_recorded: int = 100) -> StarConvexityReport:
    """Sample the secant inequality f(lam*x* + (1-lam)x) <= lam*f* + (1-lam)f(x).

    ``x`` ranges over ``n_samples`` feasible points and ``lam`` over a uniform
    grid on [0, 1].  Violations beyond ``tol`` are counted, and up to
    ``max_recorded`` of them are kept with their (x, lam, lhs, rhs) data.

    The claimed-minimum premise is sampled as well: a feasible x with
    f(x) < f(x*) - tol contradicts the declaration and is recorded as a
    violation entry (lam = 1, lhs = f(x*), rhs = f(x)).  Without this a
    convex function would pass the secant inequality for any declared point.
    """
    if x_star is None:
        x_star = objective.x_star
    if x_star is None:
        raise ValueError("no minimizer declared: pass x_star explicitly")
    x_star = np.asarray(x_star, dtype=float)
    if not feasible_set.contains(x_star, 1e-9):
        raise InfeasiblePointError("claimed minimizer is not feasible")
    f_star = objective.value(x_star)

    xs = _sample_chunked(feasible_set, n_samples, seed)
    f_xs = objective.value_batch(xs)
    violations = []
    count = 0
    max_violation = float(np.max(f_star - f_xs))
    below = np.nonzero(f_star - f_xs > tol)[0]
    count += below.size
    for i in below[:max_recorded]:
        violations.append((xs[i].copy(), 1.0, float(f_star), float(f_xs[i])))
    for lam in np.linspace(0.0, 1.0, n_lambdas):
        z = lam * x_star + (1.0 - lam) * xs
        lhs = objective.value_batch(z)
        rhs = lam * f_star + (1.0 - lam) * f_xs
        excess = lhs - rhs
        max_violation = max(max_violation, float(excess.max()))
        bad = np.nonzero(excess > tol)[0]
        count += bad.size
        for i in bad[: max(0, max_recorded - len(violations))]:
            violations.append((xs[i].copy(), float(lam), float(lhs[i]), float(rhs[i])))
    return StarConvexityReport(
        n_samples=n_samples,
        n_lambdas=n_lambdas,
        tol=tol,
        violation_count=count,
        violations=violations,
        max_violation=max_violation,
    )


def find_convexity_violation(objective, feasible_set, n_samples: int = 10_000,
                             seed: int = 0, threshold: float = 1e-9):
    """Search sampled pairs for f(y) < f(x) + grad(x) @ (y - x) - threshold.

    Returns the worst sampled witness, or None when every pair satisfies the
    gradient inequality that characterizes convexity.
    """
    pts = _sample_chunked(feasible_set, 2 * n_samples, seed)
    xs, ys = pts[:n_samples], pts[n_samples:]
    f_xs = objective.value_batch(xs)
    f_ys = objective.value_batch(ys)
    g_xs = objective.gradient_batch(xs)
    linear = f_xs + np.sum(g_xs * (ys - xs), axis=1)
    violation = linear - f_ys
    i = int(np.argmax(violation))
    if violation[i] > threshold:
        return ConvexityWitness(x=xs[i].copy(), y=ys[i].copy(), violation=float(violation[i]))
    return None


def estimate_lipschitz(objective, feasible_set, n_samples: int = 10_000,
                       seed: int = 0) -> float:
    """Max sampled gradient difference quotient; a lower estimate of L.

    For a fixed seed the estimate is monotone non-decreasing in n_samples.
    Inflate (e.g. by 10%) before trusting it inside a bound audit.
    """
    pts = _sample_chunked(feasible_set, 2 * n_samples, seed)
    xs, ys = pts[0::2], pts[1::2]  # interleaved so pair i is stable in n
    dx = np.linalg.norm(xs - ys, axis=1)
    keep = dx > 0.0
    if not np.any(keep):
        return 0.0
    dg = np.linalg.norm(
        objective.gradient_batch(xs[keep]) - objective.gradient_batch(ys[keep]), axis=1
    )
    return float(np.max(dg / dx[keep]))


def estimate_gradient_sup(objective, feasible_set, n_samples: int = 10_000,
                          seed: int = 0) -> float:
    """Max sampled gradient norm; a lower estimate of sup ||grad f|| on the set."""
    xs = _sample_chunked(feasible_set, n_samples, seed)
    return float(np.max(np.linalg.norm(objective.gradient_batch(xs), axis=1)))


def check_gradient(objective, feasible_set, n_points: int = 100, step: float = 1e-6,
                   seed: int = 0) -> float:
    """Max relative error between analytic and central-difference gradients."""
    xs = _sample_chunked(feasible_set, n_points, seed)
    worst = 0.0
    for x in xs:
        g = objective.gradient(x)
        fd = np.empty_like(g)
        for i in range(objective.dim):
            e = np.zeros(objective.dim)
            e[i] = step
            fd[i] = (objective.value(x + e) - objective.value(x - e)) / (2.0 * step)
        rel = float(np.linalg.norm(fd - g) / max(float(np.linalg.norm(g)), 1e-8))
        worst = max(worst, rel)
    return worst


# --- bound audits -------------------------------------------------------------


def _strategy_of(report: RunReport) -> str:
    return report.config.get("strategy", "")


def _require_strategy(report: RunReport, allowed, audit: str):
    s = _strategy_of(report)
    if s not in allowed:
        raise ValueError(f"audit '{audit}' applies to {allowed}, got strategy '{s}'")


def _require_constant(value, name: str):
    if value is None:
        raise ValueError(f"bound audit needs the constant '{name}'")
    return value


def audit_armijo_rate(report: RunReport, constants: BoundConstants,
                      tol_rel: float = 1e-9) -> BoundAuditReport:
    """Check f(x^k) - f* <= 1 / (zeta * gamma * k) and the stepsize floor.

    The floor requires every accepted stepsize to reach gamma * |gap|.  Both
    families must hold for the audit to pass.
    """
    _require_strategy(report, ("armijo",), "armijo_rate")
    f_star = _require_constant(constants.f_star, "f_star")
    gamma = _require_constant(constants.gamma, "gamma")
    big_gamma = constants.zeta * gamma

    pairs = []
    floor_pairs = []
    first_violation = None
    for rec in report.records:
        if rec.k >= 1:
            observed = rec.f_value - f_star
            bound = 1.0 / (big_gamma * rec.k)
            pairs.append((rec.k, observed, bound))
            if observed > bound * (1.0 + tol_rel):
                if first_violation is None or rec.k < first_violation:
                    first_violation = rec.k
        if rec.lam is not None:
            floor = gamma * abs(rec.gap)
            floor_pairs.append((rec.k, rec.lam, floor))
            if rec.lam < floor * (1.0 - tol_rel):
                if first_violation is None or rec.k < first_violation:
                    first_violation = rec.k
    return BoundAuditReport(
        bound_name="armijo_rate",
        passed=first_violation is None,
        first_violation_k=first_violation,
        pairs=pairs,
        details={"stepsize_floor_pairs": floor_pairs, "gamma": gamma},
    )


def audit_fcr_rates(report: RunReport, constants: BoundConstants,
                    tol_rel: float = 1e-9) -> list[BoundAuditReport]:
    """Value and gap rate bounds for the Lipschitz-based and diminishing rules.

    (i)  f(x^k) - f* <= 4 (L + L0) diam^2 / k              for k >= 1
    (ii) min of |gap| over {floor(k/2)+2, ..., k}
         <= 16 (L + L0) diam^2 / (k - 2)                   for k >= 3

    L0 is taken from the run configuration; it enters the constant even for
    rules that never use it algorithmically (flagged in details).
    """
    _require_strategy(report, ("adaptive", "known-l", "diminishing"), "fcr_rates")
    f_star = _require_constant(constants.f_star, "f_star")
    l = _require_constant(constants.l, "l")
    c0 = (l + constants.l0) * constants.diam ** 2

    ks = report.ks()
    fs = report.f_values()
    abs_gaps = np.abs(report.gaps())

    value_pairs = []
    value_first = None
    for k, f in zip(ks, fs):
        if k < 1:
            continue
        observed = f - f_star
        bound = 4.0 * c0 / k
        value_pairs.append((int(k), float(observed), float(bound)))
        if observed > bound * (1.0 + tol_rel) and value_first is None:
            value_first = int(k)

    gap_pairs = []
    gap_first = None
    by_k = {int(k): i for i, k in enumerate(ks)}
    max_k = int(ks.max())
    for k in range(3, max_k + 1):
        lo = k // 2 + 2
        idx = [by_k[j] for j in range(lo, k + 1) if j in by_k]
        if not idx:
            continue
        observed = float(np.min(abs_gaps[idx]))
        bound = 16.0 * c0 / (k - 2)
        gap_pairs.append((k, observed, bound))
        if observed > bound * (1.0 + tol_rel) and gap_first is None:
            gap_first = k

    flag = {}
    if _strategy_of(report) in ("known-l", "diminishing"):
        flag["l0_in_constant"] = (
            "L0 comes from configuration and enters the bound constant even "
            "though this stepsize rule never uses it"
        )
    return [
        BoundAuditReport("fcr_value", value_first is None, value_first, value_pairs, dict(flag)),
        BoundAuditReport("fcr_gap", gap_first is None, gap_first, gap_pairs, dict(flag)),
    ]


def audit_lipschitz_corridor(report: RunReport, l_true: float, l0: float,
                             tol_rel: float = 1e-9) -> BoundAuditReport:
    """Check every recorded curvature estimate stays inside [L0, L + L0]."""
    _require_strategy(report, ("adaptive",), "lipschitz_corridor")
    lower = l0 * (1.0 - tol_rel)
    upper = (l_true + l0) * (1.0 + tol_rel)
    pairs = []
    first = None
    for rec in report.records:
        if rec.l_estimate is None:
            continue
        pairs.append((rec.k, rec.l_estimate, l_true + l0))
        if not (lower <= rec.l_estimate <= upper) and first is None:
            first = rec.k
    return BoundAuditReport(
        bound_name="lipschitz_corridor",
        passed=first is None,
        first_violation_k=first,
        pairs=pairs,
        details={"lower": l0, "upper": l_true + l0},
    )


def audit_adaptive_descent(report: RunReport, tol_rel: float = 1e-9) -> BoundAuditReport:
    """Check f(x^{k+1}) <= f(x^k) - |gap_k| * lam_k / 2 for every step taken."""
    _require_strategy(report, ("adaptive",), "adaptive_descent")
    pairs = []
    first = None
    recs = report.records
    for prev, nxt in zip(recs, recs[1:]):
        if prev.lam is None:
            continue
        bound = prev.f_value - 0.5 * abs(prev.gap) * prev.lam
        pairs.append((nxt.k, nxt.f_value, bound))
        if nxt.f_value > bound + tol_rel * max(1.0, abs(bound)) and first is None:
            first = nxt.k
    return BoundAuditReport("adaptive_descent", first is None, first, pairs)


def audit_adaptive_step_floor(report: RunReport, constants: BoundConstants,
                              tol_rel: float = 1e-9) -> BoundAuditReport:
    """Check lam_k >= min(1, |gap_k| / (2 (L + L0) diam^2)) on every step."""
    _require_strategy(report, ("adaptive",), "adaptive_step_floor")
    l = _require_constant(constants.l, "l")
    alpha = 2.0 * (l + constants.l0) * constants.diam ** 2
    pairs = []
    first = None
    for rec in report.records:
        if rec.lam is None:
            continue
        floor = min(1.0, abs(rec.gap) / alpha)
        pairs.append((rec.k, rec.lam, floor))
        if rec.lam < floor * (1.0 - tol_rel) and first is None:
            first = rec.k
    return BoundAuditReport("adaptive_step_floor", first is None, first, pairs)


def run_audits(report: RunReport, constants: BoundConstants,
               tol_rel: float = 1e-9) -> list[BoundAuditReport]:
    """All audits applicable to the report's stepsize strategy."""
    strategy = _strategy_of(report)
    if strategy == "armijo":
        return [audit_armijo_rate(report, constants, tol_rel)]
    if strategy == "adaptive":
        out = audit_fcr_rates(report, constants, tol_rel)
        out.append(audit_lipschitz_corridor(report, constants.l, constants.l0, tol_rel))
        out.append(audit_adaptive_descent(report, tol_rel))
        out.append(audit_adaptive_step_floor(report, constants, tol_rel))
        return out
    if strategy in ("known-l", "diminishing"):
        return audit_fcr_rates(report, constants, tol_rel)
    raise ValueError(f"no audits defined for strategy '{strategy}'")
