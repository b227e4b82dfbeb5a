"""Differentiable objectives: convex baselines and star-convex test functions.

Objectives are immutable after construction.  Each one evaluates values and
gradients pointwise and, where it pays off, in vectorized batches; optional
metadata (known minimizer, optimal value, gradient-Lipschitz constant) feeds
the audit machinery.
"""

from abc import ABC, abstractmethod

import numpy as np

from .errors import CapabilityError, DimensionMismatchError, SingularGradientError

_SINGULAR_EPS = 1e-12


class Objective(ABC):
    """Interface for a differentiable function on R^dim.

    Attributes
    ----------
    dim : int
        Ambient dimension.
    x_star, f_star : optional
        A known global minimizer on the intended feasible set and its value.
    known_l : optional float
        A trusted gradient-Lipschitz constant on the intended feasible set.
    checker_only : bool
        True for functions whose gradient blows up at the minimizer; the
        solver refuses them, the property checkers accept them.
    """

    dim: int
    x_star: np.ndarray | None = None
    f_star: float | None = None
    known_l: float | None = None
    checker_only: bool = False

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"x has shape {x.shape}, expected ({self.dim},)"
            )
        return x

    def _check_batch(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"batch has shape {x.shape}, expected (n, {self.dim})"
            )
        return x

    def value(self, x) -> float:
        return self._value(self._check_vector(x))

    def gradient(self, x) -> np.ndarray:
        return self._gradient(self._check_vector(x))

    def hessian(self, x) -> np.ndarray:
        raise CapabilityError(f"{type(self).__name__} does not provide a Hessian")

    def value_batch(self, x) -> np.ndarray:
        x = self._check_batch(x)
        return np.array([self._value(row) for row in x])

    def gradient_batch(self, x) -> np.ndarray:
        x = self._check_batch(x)
        return np.stack([self._gradient(row) for row in x])

    @abstractmethod
    def _value(self, x: np.ndarray) -> float: ...

    @abstractmethod
    def _gradient(self, x: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def to_json(self) -> dict: ...


def _power_iteration_max_abs_eig(q: np.ndarray, tol: float = 1e-10,
                                 max_iters: int = 10_000) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix by power iteration."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(q.shape[0])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    est = 0.0
    for _ in range(max_iters):
        w = q @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            return 0.0
        if abs(nw - est) <= tol * max(1.0, nw):
            return nw
        est = nw
        v = w / nw
    return est


class Quadratic(Objective):
    """f(x) = x'Qx/2 + b'x + c for a symmetric matrix Q.

    ``known_l`` is the largest eigenvalue magnitude of Q, estimated at
    construction by power iteration.  For large multiples of the identity
    use :meth:`scaled_identity`, which never materializes the matrix (there
    the constant is |scale| exactly).
    """

    def __init__(self, q, b=None, c: float = 0.0, x_star=None, f_star=None):
        q = np.asarray(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be a square matrix")
        if not np.allclose(q, q.T, rtol=1e-12, atol=1e-12):
            raise ValueError("Q must be symmetric")
        self.q = q
        self._scale = None
        self.dim = q.shape[0]
        self._init_common(b, c, x_star, f_star)
        self.known_l = _power_iteration_max_abs_eig(q)

    @classmethod
    def scaled_identity(cls, scale: float, n: int, b=None, c: float = 0.0,
                        x_star=None, f_star=None) -> "Quadratic":
        """Quadratic with Q = scale * I, stored structurally."""
        obj = cls.__new__(cls)
        obj.q = None
        obj._scale = float(scale)
        obj.dim = int(n)
        obj._init_common(b, c, x_star, f_star)
        obj.known_l = abs(obj._scale)
        return obj

    def _init_common(self, b, c, x_star, f_star):
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)
        if self.b.shape != (self.dim,):
            raise ValueError("b must match the dimension of Q")
        self.c = float(c)
        if x_star is not None:
            self.x_star = np.asarray(x_star, dtype=float)
        if f_star is not None:
            self.f_star = float(f_star)

    def _qx(self, x):
        return self._scale * x if self.q is None else self.q @ x

    def _value(self, x):
        return float(0.5 * x @ self._qx(x) + self.b @ x + self.c)

    def _gradient(self, x):
        return self._qx(x) + self.b

    def hessian(self, x):
        self._check_vector(x)
        if self.q is None:
            return self._scale * np.eye(self.dim)
        return self.q.copy()

    def value_batch(self, x):
        x = self._check_batch(x)
        if self.q is None:
            quad = 0.5 * self._scale * np.sum(x * x, axis=1)
        else:
            quad = 0.5 * np.einsum("ni,ij,nj->n", x, self.q, x)
        return quad + x @ self.b + self.c

    def gradient_batch(self, x):
        x = self._check_batch(x)
        return (self._scale * x if self.q is None else x @ self.q.T) + self.b

    def to_json(self):
        q_spec = (
            {"scale": self._scale, "n": self.dim} if self.q is None else self.q.tolist()
        )
        out = {"type": "quadratic", "Q": q_spec, "b": self.b.tolist(), "c": self.c}
        if self.x_star is not None:
            out["x_star"] = self.x_star.tolist()
        if self.f_star is not None:
            out["f_star"] = self.f_star
        return out


class AbsExp1D(Objective):
    """f(t) = |t| (1 - exp(-|t|)) on the real line.

    Star-convex about 0 but not convex: the second derivative
    exp(-|t|)(2 - |t|) turns negative for |t| > 2.  The gradient at 0 is the
    two-sided limit, 0.
    """

    dim = 1

    def __init__(self):
        self.x_star = np.zeros(1)
        self.f_star = 0.0
        self.known_l = 2.0  # max |f''| is attained at t = 0

    def _value(self, x):
        a = abs(float(x[0]))
        return a * (1.0 - np.exp(-a))

    def _gradient(self, x):
        t = float(x[0])
        a = abs(t)
        return np.array([np.sign(t) * (1.0 - np.exp(-a) * (1.0 - a))])

    def hessian(self, x):
        a = abs(float(x[0]))
        return np.array([[np.exp(-a) * (2.0 - a)]])

    def value_batch(self, x):
        a = np.abs(self._check_batch(x)[:, 0])
        return a * (1.0 - np.exp(-a))

    def gradient_batch(self, x):
        t = self._check_batch(x)[:, 0]
        a = np.abs(t)
        return (np.sign(t) * (1.0 - np.exp(-a) * (1.0 - a)))[:, None]

    def to_json(self):
        return {"type": "absexp"}


class QuarticCross(Objective):
    """f(s, t) = s^2 t^2 + s^2 + t^2.

    Star-convex about the origin, yet the Hessian is indefinite away from the
    axes, so the function is not convex.
    """

    dim = 2

    def __init__(self):
        self.x_star = np.zeros(2)
        self.f_star = 0.0

    def _value(self, x):
        s, t = x
        return float(s * s * t * t + s * s + t * t)

    def _gradient(self, x):
        s, t = x
        return np.array([2.0 * s * t * t + 2.0 * s, 2.0 * s * s * t + 2.0 * t])

    def hessian(self, x):
        s, t = x
        return np.array([
            [2.0 * t * t + 2.0, 4.0 * s * t],
            [4.0 * s * t, 2.0 * s * s + 2.0],
        ])

    def value_batch(self, x):
        x = self._check_batch(x)
        s, t = x[:, 0], x[:, 1]
        return s * s * t * t + s * s + t * t

    def gradient_batch(self, x):
        x = self._check_batch(x)
        s, t = x[:, 0], x[:, 1]
        return np.stack([2.0 * s * t * t + 2.0 * s, 2.0 * s * s * t + 2.0 * t], axis=1)

    def to_json(self):
        return {"type": "quartic_cross"}


class PNorm(Objective):
    """Composite power map (sum_i |x_i|^p)^(1/p); geometric mean at p = 0.

    Positively homogeneous of degree one and nonnegative, hence star-convex
    about the origin for every real p.  Checker-only: the gradient is
    unbounded near the minimizer whenever p < 1 and singular at the origin
    for every p.
    """

    checker_only = True
    degree = 1.0

    def __init__(self, p: float, n: int):
        if n < 1:
            raise ValueError("dimension n must be positive")
        self.p = float(p)
        self.dim = int(n)
        self.x_star = np.zeros(n)
        self.f_star = 0.0

    def _value(self, x):
        a = np.abs(x)
        if self.p == 0.0:
            return float(np.prod(a) ** (1.0 / self.dim))
        if self.p < 0.0 and np.any(a == 0.0):
            return 0.0  # continuity limit
        return float(np.sum(a ** self.p) ** (1.0 / self.p))

    def _singular_at(self, a: np.ndarray) -> bool:
        if self.p <= 1.0 and float(np.min(a)) <= _SINGULAR_EPS:
            return True
        return float(np.linalg.norm(a)) <= _SINGULAR_EPS

    def _gradient(self, x):
        a = np.abs(x)
        if self._singular_at(a):
            raise SingularGradientError(
                f"gradient of the p-norm composite (p={self.p}) is singular here"
            )
        if self.p == 0.0:
            f = self._value(x)
            return f / (self.dim * x)
        f = float(np.sum(a ** self.p) ** (1.0 / self.p))
        return f ** (1.0 - self.p) * a ** (self.p - 1.0) * np.sign(x)

    def value_batch(self, x):
        a = np.abs(self._check_batch(x))
        if self.p == 0.0:
            return np.prod(a, axis=1) ** (1.0 / self.dim)
        if self.p < 0.0:
            out = np.zeros(a.shape[0])
            ok = np.all(a > 0.0, axis=1)
            out[ok] = np.sum(a[ok] ** self.p, axis=1) ** (1.0 / self.p)
            return out
        return np.sum(a ** self.p, axis=1) ** (1.0 / self.p)

    def to_json(self):
        return {"type": "pnorm", "p": self.p, "n": self.dim}


class NormPower(Objective):
    """||x||^r for an exponent r in (0, 1).

    Positively homogeneous of degree r, nonnegative, star-convex about the
    origin, and concave.  Checker-only: the gradient blows up at the origin.
    """

    checker_only = True

    def __init__(self, r: float, n: int):
        if not 0.0 < r < 1.0:
            raise ValueError("exponent r must lie in (0, 1)")
        if n < 1:
            raise ValueError("dimension n must be positive")
        self.r = float(r)
        self.degree = float(r)
        self.dim = int(n)
        self.x_star = np.zeros(n)
        self.f_star = 0.0

    def _value(self, x):
        return float(np.linalg.norm(x) ** self.r)

    def _gradient(self, x):
        nrm = float(np.linalg.norm(x))
        if nrm <= _SINGULAR_EPS:
            raise SingularGradientError("gradient of ||x||^r is singular at the origin")
        return self.r * nrm ** (self.r - 2.0) * x

    def value_batch(self, x):
        return np.linalg.norm(self._check_batch(x), axis=1) ** self.r

    def to_json(self):
        return {"type": "norm_power", "r": self.r, "n": self.dim}


# --- star-shaped regions with closed-form nearest points ---------------------


class BoxRegion:
    """Axis-aligned box used as a union member."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ValueError("box member needs 1-D lower/upper of equal length")
        if np.any(self.lower > self.upper):
            raise ValueError("box member requires lower <= upper")
        self.dim = self.lower.shape[0]

    def project(self, x):
        return np.clip(x, self.lower, self.upper)

    def project_batch(self, x):
        return np.clip(x, self.lower, self.upper)

    def to_json(self):
        return {"shape": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class BallRegion:
    """Euclidean ball used as a union member."""

    def __init__(self, center, radius: float):
        self.center = np.asarray(center, dtype=float)
        if not radius > 0:
            raise ValueError("ball member needs a positive radius")
        self.radius = float(radius)
        self.dim = self.center.shape[0]

    def project(self, x):
        delta = x - self.center
        nrm = float(np.linalg.norm(delta))
        if nrm <= self.radius:
            return np.asarray(x, dtype=float).copy()
        return self.center + delta * (self.radius / nrm)

    def project_batch(self, x):
        delta = x - self.center
        nrm = np.linalg.norm(delta, axis=1)
        scale = np.ones_like(nrm)
        outside = nrm > self.radius
        scale[outside] = self.radius / nrm[outside]
        return self.center + delta * scale[:, None]

    def to_json(self):
        return {"shape": "ball", "center": self.center.tolist(), "radius": self.radius}


class SegmentRegion:
    """Line segment from ``a`` to ``b`` used as a union member."""

    def __init__(self, a, b):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.a.shape != self.b.shape or self.a.ndim != 1:
            raise ValueError("segment member needs 1-D endpoints of equal length")
        self.dim = self.a.shape[0]
        self._ab = self.b - self.a
        self._len_sq = float(self._ab @ self._ab)

    def project(self, x):
        if self._len_sq == 0.0:
            return self.a.copy()
        t = float(np.clip((x - self.a) @ self._ab / self._len_sq, 0.0, 1.0))
        return self.a + t * self._ab

    def project_batch(self, x):
        if self._len_sq == 0.0:
            return np.tile(self.a, (x.shape[0], 1))
        t = np.clip((x - self.a) @ self._ab / self._len_sq, 0.0, 1.0)
        return self.a + t[:, None] * self._ab

    def to_json(self):
        return {"shape": "segment", "a": self.a.tolist(), "b": self.b.tolist()}


def member_from_json(spec: dict):
    shape = spec.get("shape")
    if shape == "box":
        return BoxRegion(spec["lower"], spec["upper"])
    if shape == "ball":
        return BallRegion(spec["center"], spec["radius"])
    if shape == "segment":
        return SegmentRegion(spec["a"], spec["b"])
    raise CapabilityError(f"unsupported union member shape '{shape}'")


def distance_squared(members, x):
    """Squared distance from ``x`` to a union of regions, with nearest point.

    Ties between members resolve to the lowest member index.
    """
    x = np.asarray(x, dtype=float)
    best_d2 = None
    best_p = None
    for member in members:
        p = member.project(x)
        delta = x - p
        d2 = float(delta @ delta)
        if best_d2 is None or d2 < best_d2:
            best_d2 = d2
            best_p = p
    if best_d2 is None:
        raise ValueError("union must have at least one member")
    return best_d2, best_p


class StarShapedDistanceSum(Objective):
    """Weighted sum of squared distances to unions of star-shaped regions.

    Each piece is a union of boxes/balls/segments that all contain the
    declared common points, so the function vanishes exactly there.  At
    points equidistant from two members the lowest-index member's nearest
    point defines the gradient.
    """

    def __init__(self, pieces, common_points):
        # pieces: iterable of (weight, [members]); weights sum to one
        self.pieces = [(float(w), list(members)) for w, members in pieces]
        if not self.pieces:
            raise ValueError("at least one piece is required")
        weights = np.array([w for w, _ in self.pieces])
        if np.any(weights < 0.0):
            raise ValueError("piece weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > 1e-9:
            raise ValueError("piece weights must sum to 1")
        self.common_points = [np.asarray(p, dtype=float) for p in common_points]
        if not self.common_points:
            raise ValueError("at least one common point is required")
        self.dim = self.common_points[0].shape[0]
        for _, members in self.pieces:
            if not members:
                raise ValueError("each piece needs at least one member")
            for member in members:
                if member.dim != self.dim:
                    raise DimensionMismatchError("member dimension mismatch")
                for p in self.common_points:
                    d2, _ = distance_squared([member], p)
                    if d2 > 1e-18:
                        raise ValueError(
                            "every union member must contain every declared common point"
                        )
        self.x_star = self.common_points[0]
        self.f_star = 0.0

    def _value(self, x):
        total = 0.0
        for w, members in self.pieces:
            d2, _ = distance_squared(members, x)
            total += w * d2
        return total

    def _gradient(self, x):
        g = np.zeros(self.dim)
        for w, members in self.pieces:
            _, nearest = distance_squared(members, x)
            g += w * 2.0 * (x - nearest)
        return g

    def value_batch(self, x):
        x = self._check_batch(x)
        total = np.zeros(x.shape[0])
        for w, members in self.pieces:
            d2 = np.stack([
                np.sum((x - member.project_batch(x)) ** 2, axis=1)
                for member in members
            ])
            total += w * d2.min(axis=0)
        return total

    def to_json(self):
        return {
            "type": "star_distance",
            "pieces": [
                {"weight": w, "members": [m.to_json() for m in members]}
                for w, members in self.pieces
            ],
            "common_points": [p.tolist() for p in self.common_points],
        }


def _require(spec: dict, key: str, what: str):
    if key not in spec:
        raise ValueError(f"{what} spec is missing key '{key}'")
    return spec[key]


def objective_from_json(spec: dict) -> Objective:
    """Build an objective from its JSON description."""
    kind = _require(spec, "type", "objective")
    if kind == "quadratic":
        q_spec = _require(spec, "Q", "quadratic")
        meta = {
            "b": spec.get("b"),
            "c": spec.get("c", 0.0),
            "x_star": spec.get("x_star"),
            "f_star": spec.get("f_star"),
        }
        if isinstance(q_spec, dict):
            return Quadratic.scaled_identity(
                _require(q_spec, "scale", "quadratic Q"),
                int(_require(q_spec, "n", "quadratic Q")),
                **meta,
            )
        return Quadratic(q_spec, **meta)
    if kind == "quartic_cross":
        return QuarticCross()
    if kind == "absexp":
        return AbsExp1D()
    if kind == "pnorm":
        return PNorm(_require(spec, "p", "pnorm"), int(_require(spec, "n", "pnorm")))
    if kind == "norm_power":
        return NormPower(_require(spec, "r", "norm_power"), int(_require(spec, "n", "norm_power")))
    if kind == "star_distance":
        pieces = [
            (piece["weight"], [member_from_json(m) for m in piece["members"]])
            for piece in _require(spec, "pieces", "star_distance")
        ]
        return StarShapedDistanceSum(pieces, _require(spec, "common_points", "star_distance"))
    raise ValueError(f"unknown objective type '{kind}'")
