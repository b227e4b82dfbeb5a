"""Shared problem builders and independent oracles for the test suite."""

import numpy as np

from starfw import (
    BoxRegion,
    BoxSet,
    ProbabilitySimplex,
    Quadratic,
    QuarticCross,
    StarShapedDistanceSum,
)


def project_onto_simplex(c):
    """Euclidean projection onto the probability simplex (sort-based).

    Independent oracle used to derive known constrained minimizers of
    quadratics of the form ||x - c||^2 / 2 over the simplex.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    u = np.sort(c)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, n + 1) > (css - 1.0))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(c - theta, 0.0)


def make_simplex_quadratic(n=10):
    """f(x) = ||x - c||^2 / 2 over the n-simplex with c = (1.6, 1.2, 0, ..., 0).

    c is outside the simplex and its projection, roughly (0.7, 0.3, 0, ..., 0),
    sits strictly inside the edge between the first two vertices: the classic
    regime where the oracle directions alternate forever and the method
    converges at rate 1/k (no iterate ever lands exactly on the minimizer).
    """
    c = np.zeros(n)
    c[0], c[1] = 1.6, 1.2
    x_star = project_onto_simplex(c)
    assert x_star[0] > 0 and x_star[1] > 0 and np.all(x_star[2:] == 0.0)
    obj = Quadratic(np.eye(n), b=-c, c=0.5 * float(c @ c))
    obj.x_star = x_star
    obj.f_star = obj.value(x_star)
    return obj, ProbabilitySimplex(n)


def make_vertex_quadratic(n=5):
    """f(x) = ||x - 2 e_1||^2 / 2 over the n-simplex; minimizer at vertex e_1."""
    c = np.zeros(n)
    c[0] = 2.0
    x_star = project_onto_simplex(c)
    assert np.allclose(x_star, np.eye(n)[0], atol=1e-12)
    obj = Quadratic(np.eye(n), b=-c, c=0.5 * float(c @ c))
    obj.x_star = np.eye(n)[0]
    obj.f_star = obj.value(obj.x_star)
    return obj, ProbabilitySimplex(n)


def quartic_box_lipschitz(half_width=1.0, grid=201):
    """Largest Hessian spectral norm of the quartic cross over a centered box,
    found by dense grid search (the maximum sits at a corner, a grid point)."""
    obj = QuarticCross()
    ticks = np.linspace(-half_width, half_width, grid)
    worst = 0.0
    for s in ticks:
        for t in ticks:
            eigs = np.linalg.eigvalsh(obj.hessian(np.array([s, t])))
            worst = max(worst, float(np.max(np.abs(eigs))))
    return worst


def make_quartic_box(half_width=1.0):
    return QuarticCross(), BoxSet([-half_width, -half_width], [half_width, half_width])


def make_two_box_star(feasible_half_width=2.0):
    """Distance-sum objective with two overlapping box pieces on a larger box.

    Both pieces contain the origin, so it is a declared common minimizer.
    """
    piece_a = (0.5, [BoxRegion([-1.0, -1.0], [0.5, 0.5])])
    piece_b = (0.5, [BoxRegion([-0.5, -0.5], [1.0, 1.0])])
    obj = StarShapedDistanceSum(
        [piece_a, piece_b], common_points=[np.zeros(2), np.array([0.25, 0.25])]
    )
    fset = BoxSet(
        [-feasible_half_width, -feasible_half_width],
        [feasible_half_width, feasible_half_width],
    )
    return obj, fset
