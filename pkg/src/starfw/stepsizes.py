"""Stepsize strategies for the conditional-gradient loop.

Each strategy is a small stateful object created per run.  ``step`` consumes
a :class:`StepContext` and returns the accepted stepsize in (0, 1] together
with the number of objective evaluations the search spent.  Backtracking
strategies also hand back the accepted trial point and its value so the
caller never re-evaluates the objective.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CurvatureSearchFailure, LineSearchFailure


@dataclass
class StepContext:
    """Per-iteration inputs for a stepsize rule.

    ``gap`` is the duality gap at ``x`` and must be strictly negative:
    stationary points stop the solver before any stepsize rule runs.
    """

    x: np.ndarray
    d: np.ndarray
    gap: float
    k: int
    objective: object
    f_x: float
    d_norm_sq: float


@dataclass
class StepResult:
    lam: float
    f_evals: int
    x_next: np.ndarray | None = None
    f_next: float | None = None


def _check_context(ctx: StepContext):
    if not ctx.gap < 0.0:
        raise ValueError("stepsize rules require a strictly negative gap")


class ArmijoRule:
    """Sufficient-decrease backtracking with a carried trial stepsize.

    Starting from the current trial, the step is shrunk by ``beta`` until
    f(x + lam*d) <= f(x) - zeta*lam*|gap|.  After acceptance at shrink level
    ``ell`` the next trial becomes beta^(ell-1) times the old one, clamped to
    1 so every step stays feasible; ``clamp_activations`` counts how often
    the clamp fired.
    """

    name = "armijo"

    def __init__(self, zeta: float = 0.1, beta: float = 0.5, max_backtracks: int = 60):
        if not 0.0 < zeta < 1.0:
            raise ValueError("zeta must lie in (0, 1)")
        if not 0.0 < beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        self.zeta = zeta
        self.beta = beta
        self.max_backtracks = max_backtracks
        self.trial = 1.0
        self.clamp_activations = 0

    def step(self, ctx: StepContext) -> StepResult:
        _check_context(ctx)
        abs_gap = -ctx.gap
        lam = self.trial
        prev = None
        for ell in range(self.max_backtracks + 1):
            x_trial = ctx.x + lam * ctx.d
            f_trial = ctx.objective.value(x_trial)
            if f_trial <= ctx.f_x - self.zeta * lam * abs_gap:
                if ell == 0:
                    new_trial = self.trial / self.beta
                else:
                    new_trial = prev  # the stepsize tested one level up
                if new_trial > 1.0:
                    new_trial = 1.0
                    self.clamp_activations += 1
                self.trial = new_trial
                return StepResult(lam=lam, f_evals=ell + 1, x_next=x_trial, f_next=f_trial)
            prev = lam
            lam = lam * self.beta
        raise LineSearchFailure(
            f"no sufficient decrease within {self.max_backtracks} backtracks",
            last_lambda=prev,
        )


class AdaptiveLipschitzRule:
    """Doubling search that estimates the curvature constant on the fly.

    At level ``j`` the candidate constant is c = 2^j * L_current and the step
    lam_j = min(1, |gap| / (c * ||d||^2)) minimizes the quadratic model
    -|gap|*lam + (c/2)*||d||^2*lam^2 over (0, 1].  A level is accepted when
    the model upper-bounds the objective at the trial point and c has reached
    at least twice the floor value L0; the second condition keeps the
    estimate sequence inside [L0, L + L0] whenever the objective's gradient
    is L-Lipschitz.  After acceptance the estimate becomes 2^(j-1)*L_current,
    so it can halve between iterations but never drops below L0.
    """

    name = "adaptive"

    def __init__(self, l0: float = 1.0, max_doublings: int = 60):
        if not l0 > 0.0:
            raise ValueError("l0 must be positive")
        self.l0 = l0
        self.l_current = l0
        self.max_doublings = max_doublings

    def step(self, ctx: StepContext) -> StepResult:
        _check_context(ctx)
        if not ctx.d_norm_sq > 0.0:
            raise ValueError("adaptive rule requires a nonzero direction")
        abs_gap = -ctx.gap
        lam = None
        for j in range(self.max_doublings + 1):
            c = (2.0 ** j) * self.l_current
            lam = min(1.0, abs_gap / (c * ctx.d_norm_sq))
            x_trial = ctx.x + lam * ctx.d
            f_trial = ctx.objective.value(x_trial)
            decrease_ok = f_trial <= ctx.f_x - abs_gap * lam + 0.5 * c * ctx.d_norm_sq * lam * lam
            if decrease_ok and c >= 2.0 * self.l0:
                self.l_current = (2.0 ** (j - 1)) * self.l_current
                return StepResult(lam=lam, f_evals=j + 1, x_next=x_trial, f_next=f_trial)
        raise CurvatureSearchFailure(
            f"acceptance test kept failing through {self.max_doublings} doublings",
            last_lambda=lam,
        )


class KnownLipschitzRule:
    """Closed-form step min(1, |gap| / (L ||d||^2)); zero objective evaluations."""

    name = "known-l"

    def __init__(self, l: float):
        if not l > 0.0:
            raise ValueError("L must be positive")
        self.l = l

    def step(self, ctx: StepContext) -> StepResult:
        _check_context(ctx)
        if not ctx.d_norm_sq > 0.0:
            raise ValueError("known-L rule requires a nonzero direction")
        lam = min(1.0, -ctx.gap / (self.l * ctx.d_norm_sq))
        return StepResult(lam=lam, f_evals=0)


def diminishing_step(k: int) -> float:
    """The parameter-free schedule 2 / (k + 2)."""
    if k < 0:
        raise ValueError("iteration index must be nonnegative")
    return 2.0 / (k + 2.0)


class DiminishingRule:
    """Deterministic schedule lam_k = 2 / (k + 2); needs no problem data."""

    name = "diminishing"

    def step(self, ctx: StepContext) -> StepResult:
        _check_context(ctx)
        return StepResult(lam=diminishing_step(ctx.k), f_evals=0)


STRATEGY_NAMES = ("armijo", "adaptive", "known-l", "diminishing")


def build_strategy(name: str, *, zeta: float = 0.1, beta: float = 0.5,
                   l0: float = 1.0, l: float | None = None):
    """Instantiate a fresh strategy by its selection string."""
    if name == "armijo":
        return ArmijoRule(zeta=zeta, beta=beta)
    if name == "adaptive":
        return AdaptiveLipschitzRule(l0=l0)
    if name == "known-l":
        if l is None:
            raise ValueError(
                "strategy 'known-l' needs a Lipschitz constant: set config key 'l' "
                "or use an objective that declares one"
            )
        return KnownLipschitzRule(l=l)
    if name == "diminishing":
        return DiminishingRule()
    raise ValueError(f"unknown strategy '{name}' (choose from {', '.join(STRATEGY_NAMES)})")
