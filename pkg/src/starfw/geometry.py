"""Compact convex feasible sets with closed-form linear minimization oracles.

All sets are immutable after construction and safe to share across threads;
samplers take their seed explicitly and keep no internal state.
"""

from abc import ABC, abstractmethod

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatchError


class FeasibleSet(ABC):
    """A compact convex set queried through a linear minimization oracle.

    Subclasses provide ``lmo``, ``diameter``, ``contains`` and a seedable
    ``sample``.  Oracle ties are broken toward the lowest index so repeated
    runs are reproducible.
    """

    dim: int

    def _check_vector(self, v, name: str = "x") -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(
                f"{name} has shape {v.shape}, expected ({self.dim},)"
            )
        return v

    def lmo(self, g) -> np.ndarray:
        """Return argmin of ``g @ u`` over the set (lowest index on ties)."""
        g = self._check_vector(g, "g")
        if not np.all(np.isfinite(g)):
            raise ValueError("lmo requires a finite gradient vector")
        return self._lmo(g)

    def contains(self, x, tol: float = 1e-9) -> bool:
        """True if ``x`` violates the set's constraints by at most ``tol``."""
        x = self._check_vector(x)
        if tol < 0:
            raise ValueError("tol must be nonnegative")
        return self._contains(x, tol)

    def sample(self, seed: int) -> np.ndarray:
        """Return one feasible point; identical seeds give identical points."""
        return self.sample_batch(1, seed)[0]

    def sample_batch(self, n: int, seed: int) -> np.ndarray:
        """Return ``n`` feasible points as rows of an ``(n, dim)`` array."""
        if n < 1:
            raise ValueError("n must be positive")
        rng = np.random.default_rng(seed)
        return self._sample(rng, n)

    @abstractmethod
    def _lmo(self, g: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def diameter(self) -> float: ...

    @abstractmethod
    def _contains(self, x: np.ndarray, tol: float) -> bool: ...

    @abstractmethod
    def _sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    @abstractmethod
    def to_json(self) -> dict: ...


class ProbabilitySimplex(FeasibleSet):
    """Points with nonnegative entries summing to one."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("simplex dimension n must be at least 2")
        self.dim = int(n)

    def _lmo(self, g):
        p = np.zeros(self.dim)
        p[int(np.argmin(g))] = 1.0
        return p

    def diameter(self):
        # distance between any two distinct unit vertices
        return float(np.sqrt(2.0))

    def _contains(self, x, tol):
        return bool(np.all(x >= -tol) and abs(float(np.sum(x)) - 1.0) <= tol)

    def _sample(self, rng, n):
        e = rng.standard_exponential((n, self.dim))
        return e / e.sum(axis=1, keepdims=True)

    def to_json(self):
        return {"type": "simplex", "n": self.dim}


class BoxSet(FeasibleSet):
    """Axis-aligned box ``lower <= x <= upper`` (componentwise)."""

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D vectors of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper componentwise")
        self.lower = lower
        self.upper = upper
        self.dim = lower.shape[0]

    def _lmo(self, g):
        # per-coordinate sign rule; g_i == 0 takes the lower bound
        return np.where(g > 0.0, self.lower, np.where(g < 0.0, self.upper, self.lower))

    def diameter(self):
        return float(np.linalg.norm(self.upper - self.lower))

    def _contains(self, x, tol):
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def _sample(self, rng, n):
        u = rng.random((n, self.dim))
        return self.lower + u * (self.upper - self.lower)

    def to_json(self):
        return {"type": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}


class L2Ball(FeasibleSet):
    """Euclidean ball of given radius around ``center``."""

    def __init__(self, radius: float, center):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1:
            raise ValueError("center must be a 1-D vector")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = center
        self.dim = center.shape[0]

    def _lmo(self, g):
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            # any point is optimal for a zero gradient; the center is canonical
            return self.center.copy()
        return self.center - (self.radius / nrm) * g

    def diameter(self):
        return 2.0 * self.radius

    def _contains(self, x, tol):
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def _sample(self, rng, n):
        d = rng.standard_normal((n, self.dim))
        nrm = np.linalg.norm(d, axis=1, keepdims=True)
        nrm[nrm == 0.0] = 1.0
        scale = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self.center + d / nrm * scale[:, None]

    def to_json(self):
        return {"type": "l2", "radius": self.radius, "center": self.center.tolist()}


class L1Ball(FeasibleSet):
    """Cross-polytope ``||x - center||_1 <= radius``."""

    def __init__(self, radius: float, center):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1:
            raise ValueError("center must be a 1-D vector")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = center
        self.dim = center.shape[0]

    def _lmo(self, g):
        # vertices are center +/- radius * e_i, enumerated +block then -block
        base = float(g @ self.center)
        scores = np.concatenate([base + self.radius * g, base - self.radius * g])
        idx = int(np.argmin(scores))
        p = self.center.copy()
        if idx < self.dim:
            p[idx] += self.radius
        else:
            p[idx - self.dim] -= self.radius
        return p

    def diameter(self):
        return 2.0 * self.radius

    def _contains(self, x, tol):
        return bool(np.sum(np.abs(x - self.center)) <= self.radius + tol)

    def _sample(self, rng, n):
        d = rng.standard_normal((n, self.dim))
        l1 = np.sum(np.abs(d), axis=1, keepdims=True)
        l1[l1 == 0.0] = 1.0
        scale = self.radius * rng.random(n) ** (1.0 / self.dim)
        return self.center + d / l1 * scale[:, None]

    def to_json(self):
        return {"type": "l1", "radius": self.radius, "center": self.center.tolist()}


class VertexPolytope(FeasibleSet):
    """Convex hull of an explicit list of vertices."""

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("vertices must be a nonempty list of equal-length vectors")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertices must be finite")
        self.vertices = v
        self.dim = v.shape[1]

    def _lmo(self, g):
        idx = int(np.argmin(self.vertices @ g))
        return self.vertices[idx].copy()

    def diameter(self):
        v = self.vertices
        sq = np.sum(v * v, axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (v @ v.T)
        return float(np.sqrt(max(float(d2.max()), 0.0)))

    def _contains(self, x, tol):
        # smallest componentwise residual over convex combinations of the
        # vertices, found by a small linear feasibility search
        m = self.vertices.shape[0]
        c = np.zeros(m + 1)
        c[-1] = 1.0
        a_up = np.hstack([self.vertices.T, -np.ones((self.dim, 1))])
        a_lo = np.hstack([-self.vertices.T, -np.ones((self.dim, 1))])
        a_ub = np.vstack([a_up, a_lo])
        b_ub = np.concatenate([x, -x])
        a_eq = np.zeros((1, m + 1))
        a_eq[0, :m] = 1.0
        res = linprog(
            c,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq,
            b_eq=[1.0],
            bounds=[(0, None)] * (m + 1),
            method="highs",
        )
        if not res.success:
            return False
        return bool(res.x[-1] <= tol + 1e-12)

    def _sample(self, rng, n):
        w = rng.standard_exponential((n, self.vertices.shape[0]))
        w /= w.sum(axis=1, keepdims=True)
        return w @ self.vertices

    def to_json(self):
        return {"type": "polytope", "vertices": self.vertices.tolist()}


def _require(spec: dict, key: str, what: str):
    if key not in spec:
        raise ValueError(f"{what} spec is missing key '{key}'")
    return spec[key]


def set_from_json(spec: dict) -> FeasibleSet:
    """Build a feasible set from its JSON description."""
    kind = _require(spec, "type", "set")
    if kind == "simplex":
        return ProbabilitySimplex(int(_require(spec, "n", "simplex")))
    if kind == "box":
        return BoxSet(_require(spec, "lower", "box"), _require(spec, "upper", "box"))
    if kind == "l2":
        return L2Ball(_require(spec, "radius", "l2 ball"), _require(spec, "center", "l2 ball"))
    if kind == "l1":
        return L1Ball(_require(spec, "radius", "l1 ball"), _require(spec, "center", "l1 ball"))
    if kind == "polytope":
        return VertexPolytope(_require(spec, "vertices", "polytope"))
    raise ValueError(f"unknown set type '{kind}'")
