import json

import numpy as np
import pytest

from conftest import make_quartic_box, make_simplex_quadratic, make_vertex_quadratic
from starfw import (
    BoxSet,
    PNorm,
    Quadratic,
    QuarticCross,
    RunReport,
    SolverConfig,
    gamma_constant,
    gap,
    replay_bound_inputs,
    solve,
)
from starfw.errors import (
    CheckerOnlyError,
    DimensionMismatchError,
    InfeasiblePointError,
    MissingConstantError,
)


def test_gap_hand_example():
    # f(x) = x^2/2 on [-1, 1] at x = 1: grad 1, oracle point -1, gap -2
    obj = Quadratic([[1.0]])
    box = BoxSet([-1.0], [1.0])
    omega, p = gap(obj, box, [1.0])
    assert omega == -2.0
    assert np.array_equal(p, [-1.0])


def test_gap_is_zero_where_the_gradient_vanishes():
    obj, box = make_quartic_box()
    omega, _ = gap(obj, box, [0.0, 0.0])
    assert omega == 0.0


def test_gap_is_zero_at_the_minimizer_of_a_linear_objective():
    obj = Quadratic(np.zeros((2, 2)), b=[1.0, -2.0])  # linear: f = b @ x
    box = BoxSet([-1, -1], [1, 1])
    minimizer = box.lmo(np.array([1.0, -2.0]))
    omega, p = gap(obj, box, minimizer)
    assert omega == 0.0
    assert np.array_equal(p, minimizer)


def test_gap_rejects_infeasible_points():
    obj = Quadratic([[1.0]])
    box = BoxSet([-1.0], [1.0])
    with pytest.raises(InfeasiblePointError):
        gap(obj, box, [1.5])


def test_solve_one_dimensional_hand_trace():
    obj = Quadratic([[1.0]])
    box = BoxSet([-1.0], [1.0])
    cfg = SolverConfig(strategy="known-l", l=1.0, x0=np.array([1.0]))
    report = solve(obj, box, cfg)
    assert len(report.records) == 2
    k0, k1 = report.records
    assert (k0.f_value, k0.gap, k0.lam) == (0.5, -2.0, 0.5)
    assert (k1.f_value, k1.gap, k1.lam) == (0.0, 0.0, None)
    assert report.termination == "gap_tol_reached"
    assert np.array_equal(report.final_x, [0.0])


def test_stationary_start_gives_a_single_record():
    obj, box = make_quartic_box()
    cfg = SolverConfig(strategy="armijo", x0=np.zeros(2))
    report = solve(obj, box, cfg)
    assert len(report.records) == 1
    assert report.termination == "gap_tol_reached"


def test_diminishing_lambda_sequence():
    obj, simplex = make_simplex_quadratic(n=4)
    cfg = SolverConfig(strategy="diminishing", max_iters=5, gap_tol=0.0, seed=1)
    report = solve(obj, simplex, cfg)
    lams = [r.lam for r in report.records[:-1]]
    assert lams == [2.0 / (k + 2) for k in range(len(lams))]
    assert lams[:4] == [1.0, 2.0 / 3.0, 0.5, 0.4]


@pytest.mark.parametrize("strategy", ["armijo", "adaptive", "known-l", "diminishing"])
def test_all_strategies_reach_the_optimum_on_a_simplex_quadratic(strategy):
    obj, simplex = make_vertex_quadratic(n=5)
    cfg = SolverConfig(strategy=strategy, max_iters=10_000, gap_tol=1e-14, seed=3)
    report = solve(obj, simplex, cfg)
    assert report.records[-1].f_value - obj.f_star <= 1e-6


@pytest.mark.parametrize("strategy", ["armijo", "adaptive"])
def test_monotone_descent_for_backtracking_strategies(strategy):
    obj, box = make_quartic_box()
    cfg = SolverConfig(strategy=strategy, max_iters=200, gap_tol=0.0, seed=5)
    report = solve(obj, box, cfg)
    f = report.f_values()
    assert np.all(np.diff(f) <= 0.0)


def test_armijo_acceptance_inequality_holds_on_recorded_values():
    obj, box = make_quartic_box()
    cfg = SolverConfig(strategy="armijo", max_iters=300, gap_tol=0.0, seed=7)
    report = solve(obj, box, cfg)
    recs = report.records
    for prev, nxt in zip(recs, recs[1:]):
        assert nxt.f_value <= prev.f_value - cfg.zeta * prev.lam * abs(prev.gap)


def test_recorded_gaps_are_nonpositive_and_final_iterate_feasible():
    for obj, fset in (make_quartic_box(), make_simplex_quadratic(n=6)):
        cfg = SolverConfig(strategy="adaptive", max_iters=150, gap_tol=0.0, seed=11)
        report = solve(obj, fset, cfg)
        assert np.all(report.gaps() <= 0.0)
        assert fset.contains(report.final_x, cfg.feasibility_tol)


def test_adaptive_estimates_start_at_l0_and_are_recorded():
    obj, simplex = make_simplex_quadratic(n=6)
    cfg = SolverConfig(strategy="adaptive", l0=1.0, max_iters=50, gap_tol=0.0, seed=2)
    report = solve(obj, simplex, cfg)
    l_est = report.l_estimates()
    assert l_est[0] == 1.0
    assert all(e is not None for e in l_est)


def test_fevals_accounting():
    obj, box = make_quartic_box()
    cfg = SolverConfig(strategy="armijo", max_iters=100, gap_tol=0.0, seed=13)
    report = solve(obj, box, cfg)
    cum = 0
    for rec in report.records:
        cum += rec.fevals_iter
        assert rec.fevals_cum == cum
        if rec.lam is not None:
            assert rec.fevals_iter >= 1  # at least the accepted evaluation
    cfg2 = SolverConfig(strategy="known-l", l=8.0, max_iters=100, gap_tol=0.0, seed=13)
    report2 = solve(obj, box, cfg2)
    assert report2.records[-1].fevals_cum == 0


def test_solve_is_deterministic():
    obj, box = make_quartic_box()
    cfg = SolverConfig(strategy="armijo", max_iters=200, gap_tol=0.0, seed=17)
    a = solve(obj, box, cfg)
    b = solve(obj, box, cfg)
    assert a.trace_csv_text() == b.trace_csv_text()
    assert np.array_equal(a.final_x, b.final_x)


def test_solver_refuses_checker_only_objectives():
    with pytest.raises(CheckerOnlyError, match="checker-only"):
        solve(PNorm(0.5, 2), BoxSet([-1, -1], [1, 1]), SolverConfig())


def test_solver_validates_dimensions_and_start_point():
    obj = QuarticCross()
    with pytest.raises(DimensionMismatchError):
        solve(obj, BoxSet([-1.0], [1.0]), SolverConfig())
    with pytest.raises(InfeasiblePointError):
        solve(obj, BoxSet([-1, -1], [1, 1]), SolverConfig(x0=np.array([2.0, 0.0])))


def test_line_search_failure_yields_partial_trace_not_a_crash():
    class LyingQuartic(QuarticCross):
        """Gradient scaled way up so the claimed decrease is unattainable."""

        def _gradient(self, x):
            return 1e9 * super()._gradient(x)

        def to_json(self):
            return {"type": "quartic_cross"}

    obj = LyingQuartic()
    cfg = SolverConfig(strategy="armijo", max_iters=50, x0=np.array([0.9, 0.8]))
    report = solve(obj, BoxSet([-1, -1], [1, 1]), cfg)
    assert report.termination == "line_search_failure"
    assert len(report.records) >= 1
    assert report.records[-1].lam is None


def test_max_iters_termination_and_record_count():
    obj, simplex = make_simplex_quadratic(n=6)
    cfg = SolverConfig(strategy="known-l", max_iters=25, gap_tol=0.0, seed=19)
    report = solve(obj, simplex, cfg)
    assert report.termination == "max_iters"
    assert [r.k for r in report.records] == list(range(26))
    assert report.records[-1].lam is None


def test_trace_csv_and_json_round_trip():
    obj, box = make_quartic_box()
    cfg = SolverConfig(strategy="adaptive", max_iters=30, gap_tol=0.0, seed=23)
    report = solve(obj, box, cfg)
    text = report.trace_csv_text()
    assert text.splitlines()[0] == "k,f,gap,lambda,L_est,fevals_iter,fevals_cum"
    # doubles survive the 17-significant-digit round trip losslessly
    row = text.splitlines()[1].split(",")
    assert float(row[1]) == report.records[0].f_value
    assert float(row[2]) == report.records[0].gap
    # the terminal record took no step: empty lambda cell
    assert report.records[-1].lam is None
    assert text.splitlines()[-1].split(",")[3] == ""

    rebuilt = RunReport.from_json_dict(json.loads(json.dumps(report.to_json_dict())))
    assert rebuilt.termination == report.termination
    assert len(rebuilt.records) == len(report.records)
    for a, b in zip(rebuilt.records, report.records):
        assert a == b
    assert np.array_equal(rebuilt.final_x, report.final_x)
    assert rebuilt.config == report.config


def test_replay_bound_inputs_recomputes_the_constants():
    obj = Quadratic(2.0 * np.eye(2))  # gradient 2x, so L = 2
    box = BoxSet([-1, -1], [1, 1])
    cfg = SolverConfig(strategy="armijo", max_iters=20, gap_tol=0.0, seed=29)
    report = solve(obj, box, cfg)
    constants = replay_bound_inputs(report)
    diam = box.diameter()
    assert constants.diam == pytest.approx(np.sqrt(8.0))
    assert constants.l == pytest.approx(2.0, rel=1e-8)
    # rho: 10%-inflated sampled sup of ||2x|| over the box (true sup 2*sqrt2)
    true_sup = 2.0 * np.sqrt(2.0)
    assert true_sup <= constants.rho <= 1.1 * true_sup + 1e-9
    expected_gamma = min(
        1.0 / (constants.rho * diam),
        2.0 * cfg.beta * (1.0 - cfg.zeta) / (constants.l * diam**2),
    )
    assert constants.gamma == pytest.approx(expected_gamma, rel=1e-12)
    assert constants.gamma == pytest.approx(
        gamma_constant(constants.rho, diam, constants.l, cfg.zeta, cfg.beta)
    )


def test_replay_passes_simplex_diameter_through():
    obj, simplex = make_simplex_quadratic(n=3)
    report = solve(obj, simplex, SolverConfig(strategy="armijo", max_iters=5, seed=1))
    constants = replay_bound_inputs(report)
    assert constants.diam == pytest.approx(np.sqrt(2.0))


def test_replay_reports_no_gamma_for_diminishing_runs():
    obj, simplex = make_simplex_quadratic(n=3)
    report = solve(obj, simplex, SolverConfig(strategy="diminishing", max_iters=5, seed=1))
    constants = replay_bound_inputs(report)
    assert constants.gamma is None
    assert constants.rho is None


def test_replay_demands_a_lipschitz_constant_when_none_declared():
    obj, box = make_quartic_box()  # quartic declares no L
    report = solve(obj, box, SolverConfig(strategy="diminishing", max_iters=5, seed=1))
    with pytest.raises(MissingConstantError, match="estimate"):
        replay_bound_inputs(report)
    constants = replay_bound_inputs(report, l_estimate=8.8)
    assert constants.l == 8.8


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0).validate()
    with pytest.raises(ValueError):
        SolverConfig(gap_tol=-1.0).validate()
