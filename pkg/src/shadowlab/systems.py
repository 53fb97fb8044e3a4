"""Dynamical systems on flat phase spaces.

A system is an invertible map together with its Jacobians on either the unit
torus [0,1)^n (wrap-around metric) or a Euclidean box.  Built-in families:

* toral automorphisms  x -> M x  (mod 1)  for an integer matrix with |det| = 1,
* Jordan-block models  v -> A v + phi(v)  with A = diag(B, P), where B is a
  unit-modulus Jordan-type block, P is a hyperbolic diagonal tail and phi is a
  configurable nonlinearity that vanishes identically on a core ball,
* smoothly perturbed toral automorphisms,
* arbitrary linear maps on a box (mostly used as test oracles).

All systems are immutable after construction and evaluation is pure, so they
are safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import OrbitEscapeError

Array = np.ndarray

MAX_ITERATE_STEPS = 10**7


def _frozen(a, dtype=float) -> Array:
    out = np.array(a, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PhaseSpace:
    """Flat phase space: the unit torus or a Euclidean box.

    ``diff`` returns the displacement vector between two points in chart
    coordinates (shortest wrapped representative on the torus) and ``dist``
    its Euclidean length, so the torus metric never exceeds sqrt(n)/2.
    """

    kind: str  # "torus" | "euclidean"
    dim: int
    lower: Array | None = None
    upper: Array | None = None

    @staticmethod
    def torus(dim: int) -> "PhaseSpace":
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        return PhaseSpace("torus", dim)

    @staticmethod
    def box(lower, upper) -> "PhaseSpace":
        lo = _frozen(lower)
        hi = _frozen(upper)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-d arrays of equal length")
        if not np.all(lo < hi):
            raise ValueError("lower bounds must be strictly below upper bounds")
        return PhaseSpace("euclidean", lo.size, lo, hi)

    @staticmethod
    def cube(dim: int, halfwidth: float) -> "PhaseSpace":
        if halfwidth <= 0:
            raise ValueError("halfwidth must be positive")
        w = np.full(dim, float(halfwidth))
        return PhaseSpace.box(-w, w)

    def wrap(self, x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        if self.kind == "torus":
            return np.mod(x, 1.0)
        return x

    def contains(self, x: Array) -> bool:
        if self.kind == "torus":
            return True
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))

    def diff(self, a: Array, b: Array) -> Array:
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        if self.kind == "torus":
            d = d - np.round(d)
        return d

    def dist(self, a: Array, b: Array) -> float:
        return float(np.linalg.norm(self.diff(a, b)))


@dataclass(frozen=True)
class DiscreteSystem:
    """Invertible map with Jacobians on a flat phase space.

    ``norm_bound`` is an upper bound for the operator norm of the Jacobian
    over the phase space (exact for linear maps, sampled otherwise).  When the
    map is globally linear in chart coordinates, ``linear_matrix`` holds the
    matrix; solvers may use it but never require it.
    """

    space: PhaseSpace
    forward: Callable[[Array], Array]
    inverse: Callable[[Array], Array]
    jacobian: Callable[[Array], Array]
    jacobian_inverse: Callable[[Array], Array]
    norm_bound: float
    linear_matrix: Array | None = None

    @property
    def dim(self) -> int:
        return self.space.dim


def evaluate(sys: DiscreteSystem, x: Array, k: int) -> Array:
    """Return the k-th iterate of x (negative k uses the inverse map)."""
    if abs(k) > MAX_ITERATE_STEPS:
        raise ValueError(f"|k| must be <= {MAX_ITERATE_STEPS}")
    x = sys.space.wrap(np.asarray(x, dtype=float))
    if not sys.space.contains(x):
        raise OrbitEscapeError(0, x)
    step = sys.forward if k >= 0 else sys.inverse
    for i in range(abs(k)):
        x = sys.space.wrap(step(x))
        if not sys.space.contains(x):
            raise OrbitEscapeError(i + 1, x)
    return x


def orbit_segment(sys: DiscreteSystem, x: Array, start: int, stop: int) -> Array:
    """Return the iterates f^i(x) for i = start..stop as a (stop-start+1, n) array."""
    if start > stop:
        raise ValueError("start must be <= stop")
    current = evaluate(sys, x, start)
    out = np.empty((stop - start + 1, sys.dim))
    out[0] = current
    for j in range(1, stop - start + 1):
        current = sys.space.wrap(sys.forward(current))
        if not sys.space.contains(current):
            raise OrbitEscapeError(start + j, current)
        out[j] = current
    return out


def low_discrepancy_sample(space: PhaseSpace, count: int) -> Array:
    """Deterministic Halton sample of the phase space (same points every run)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    unit = qmc.Halton(d=space.dim, scramble=False).random(count)
    if space.kind == "torus":
        return unit
    return space.lower + unit * (space.upper - space.lower)


def estimate_norm_bound(sys: DiscreteSystem, samples: int = 10_000) -> float:
    """Max operator norm of the Jacobian over a deterministic sample.

    Exact (and independent of ``samples``) for globally linear systems.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if sys.linear_matrix is not None:
        return float(np.linalg.norm(sys.linear_matrix, 2))
    pts = low_discrepancy_sample(sys.space, samples)
    jacs = np.stack([sys.jacobian(p) for p in pts])
    return float(np.linalg.svd(jacs, compute_uv=False)[:, 0].max())


# ---------------------------------------------------------------------------
# linear systems on a box


def linear_system(matrix, halfwidth: float = 1e6) -> DiscreteSystem:
    """Invertible linear map v -> A v on a centered Euclidean box."""
    a = _frozen(matrix)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    a_inv = _frozen(np.linalg.inv(a))
    space = PhaseSpace.cube(a.shape[0], halfwidth)
    return DiscreteSystem(
        space=space,
        forward=lambda x: a @ x,
        inverse=lambda x: a_inv @ x,
        jacobian=lambda x: a,
        jacobian_inverse=lambda x: a_inv,
        norm_bound=float(np.linalg.norm(a, 2)),
        linear_matrix=a,
    )


# ---------------------------------------------------------------------------
# toral automorphisms


def _integer_matrix(matrix) -> Array:
    m = np.asarray(matrix)
    m_int = np.rint(m).astype(np.int64)
    if not np.all(np.abs(m - m_int) < 1e-9):
        raise ValueError("toral automorphism matrix must have integer entries")
    if m_int.ndim != 2 or m_int.shape[0] != m_int.shape[1]:
        raise ValueError("matrix must be square")
    return m_int


def _integer_det(m: Array) -> int:
    a = [[int(v) for v in row] for row in m]
    n = len(a)
    if n == 1:
        return a[0][0]
    det = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in a[1:]]
        det += (-1) ** j * a[0][j] * _integer_det(np.array(minor, dtype=object))
    return det


@dataclass(frozen=True)
class ToralAutomorphism:
    """x -> M x (mod 1) for an integer matrix with |det M| = 1."""

    matrix: Array  # int64, read-only
    inverse_matrix: Array
    hyperbolic: bool

    @cached_property
    def system(self) -> DiscreteSystem:
        m = _frozen(self.matrix, dtype=float)
        m_inv = _frozen(self.inverse_matrix, dtype=float)
        space = PhaseSpace.torus(self.matrix.shape[0])
        return DiscreteSystem(
            space=space,
            forward=lambda x: np.mod(m @ x, 1.0),
            inverse=lambda x: np.mod(m_inv @ x, 1.0),
            jacobian=lambda x: m,
            jacobian_inverse=lambda x: m_inv,
            norm_bound=float(np.linalg.norm(m, 2)),
            linear_matrix=m,
        )


def toral_automorphism(matrix) -> ToralAutomorphism:
    m_int = _integer_matrix(matrix)
    det = _integer_det(m_int)
    if abs(det) != 1:
        raise ValueError(f"|det| must be 1, got {det}")
    inv = np.rint(np.linalg.inv(m_int.astype(float))).astype(np.int64)
    if not np.array_equal(m_int @ inv, np.eye(m_int.shape[0], dtype=np.int64)):
        raise ValueError("failed to compute the exact integer inverse")
    moduli = np.abs(np.linalg.eigvals(m_int.astype(float)))
    hyperbolic = bool(np.all(np.abs(moduli - 1.0) > 1e-9))
    return ToralAutomorphism(_frozen(m_int, np.int64), _frozen(inv, np.int64), hyperbolic)


def cat_map() -> ToralAutomorphism:
    """The standard hyperbolic automorphism [[2, 1], [1, 1]] of the 2-torus."""
    return toral_automorphism([[2, 1], [1, 1]])


# ---------------------------------------------------------------------------
# Jordan-block models


def _bump(t: float) -> float:
    # exp(-1/t) continued by zero: the standard C-infinity mollifier leg
    return math.exp(-1.0 / t) if t > 0.0 else 0.0


def _bump_deriv(t: float) -> float:
    return math.exp(-1.0 / t) / (t * t) if t > 0.0 else 0.0


def _smoothstep(t: float) -> float:
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    h1 = _bump(t)
    h2 = _bump(1.0 - t)
    return h1 / (h1 + h2) if (h1 + h2) > 0.0 else (1.0 if t >= 1.0 else 0.0)


def _smoothstep_deriv(t: float) -> float:
    h1, h2 = _bump(t), _bump(1.0 - t)
    s = h1 + h2
    if s == 0.0:
        return 0.0
    return (_bump_deriv(t) * h2 + h1 * _bump_deriv(1.0 - t)) / (s * s)


def real_jordan_block(size: int, eigenvalue: int) -> Array:
    """size x size block: ``eigenvalue`` on the diagonal, ones on the superdiagonal."""
    if size < 1:
        raise ValueError("block size must be >= 1")
    if eigenvalue not in (1, -1):
        raise ValueError("eigenvalue must be +1 or -1")
    b = np.eye(size) * eigenvalue
    for i in range(size - 1):
        b[i, i + 1] = 1.0
    return b


def rotation_jordan_block(planes: int, theta: float) -> Array:
    """2*planes x 2*planes block: rotation blocks R(theta) on the diagonal, identity couplings above."""
    if planes < 1:
        raise ValueError("number of planes must be >= 1")
    a, b = math.cos(theta), math.sin(theta)
    r = np.array([[a, -b], [b, a]])
    out = np.zeros((2 * planes, 2 * planes))
    for i in range(planes):
        out[2 * i : 2 * i + 2, 2 * i : 2 * i + 2] = r
        if i + 1 < planes:
            out[2 * i : 2 * i + 2, 2 * i + 2 : 2 * i + 4] = np.eye(2)
    return out


@dataclass(frozen=True)
class JordanModel:
    """Fixed point at the origin with differential A = diag(B, P).

    ``block`` selects B: "real" (unit Jordan block of size ``size`` with
    eigenvalue +-1), "rotation" (size 2*``size`` with rotation angle
    ``theta``), or None for a purely hyperbolic diagonal map A = P.

    The map is F(v) = A v + phi(v) where phi vanishes identically for
    |v| <= a_ball, satisfies |phi(v)| <= c |v|^3 everywhere, and saturates
    smoothly beyond 2 a_ball so the map stays a global diffeomorphism for the
    default scale c = 1.  Inside the core ball the evaluation takes the exact
    linear branch, bit-for-bit reproducible.
    """

    block: str | None
    size: int
    eigenvalue: int
    theta: float
    tail: tuple[float, ...]
    c: float
    a_ball: float
    halfwidth: float
    matrix: Array = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def block_dim(self) -> int:
        return self.dim - len(self.tail)

    @cached_property
    def _phi_cap(self) -> float:
        return self.a_ball**3 / 4.0

    def _phi_profile(self, r: float) -> tuple[float, float]:
        """Radial profile beta(r) of the nonlinearity and its derivative."""
        a = self.a_ball
        t = (r - a) / a
        return self._phi_cap * _smoothstep(t), self._phi_cap * _smoothstep_deriv(t) / a

    def phi(self, v: Array) -> Array:
        r = float(np.linalg.norm(v))
        if self.c == 0.0 or r <= self.a_ball:
            return np.zeros_like(v)
        beta, _ = self._phi_profile(r)
        return (self.c * beta / r) * v

    def phi_jacobian(self, v: Array) -> Array:
        n = v.size
        r = float(np.linalg.norm(v))
        if self.c == 0.0 or r <= self.a_ball:
            return np.zeros((n, n))
        beta, dbeta = self._phi_profile(r)
        unit = v / r
        proj = np.outer(unit, unit)
        return self.c * (dbeta * proj + (beta / r) * (np.eye(n) - proj))

    @cached_property
    def system(self) -> DiscreteSystem:
        a = self.matrix
        a_inv = _frozen(np.linalg.inv(a))
        space = PhaseSpace.cube(self.dim, self.halfwidth)

        def forward(v: Array) -> Array:
            v = np.asarray(v, dtype=float)
            if self.c == 0.0 or float(v @ v) <= self.a_ball**2:
                return a @ v  # exact linear branch
            return a @ v + self.phi(v)

        def jacobian(v: Array) -> Array:
            v = np.asarray(v, dtype=float)
            if self.c == 0.0 or float(v @ v) <= self.a_ball**2:
                return np.array(a)
            return a + self.phi_jacobian(v)

        def inverse(y: Array) -> Array:
            y = np.asarray(y, dtype=float)
            x = a_inv @ y
            for _ in range(100):
                r = forward(x) - y
                if float(np.linalg.norm(r)) <= 1e-14 * (1.0 + float(np.linalg.norm(y))):
                    return x
                x = x - np.linalg.solve(jacobian(x), r)
            raise RuntimeError("inverse Newton iteration failed to converge")

        norm = float(np.linalg.norm(a, 2))
        if self.c > 0.0:
            norm += self.c * self._phi_lipschitz()
        return DiscreteSystem(
            space=space,
            forward=forward,
            inverse=inverse,
            jacobian=jacobian,
            jacobian_inverse=lambda v: np.linalg.inv(jacobian(v)),
            norm_bound=norm,
            linear_matrix=a if self.c == 0.0 else None,
        )

    def _phi_lipschitz(self) -> float:
        # sup over r of max(beta'(r), beta(r)/r), evaluated on a fine grid
        rs = np.linspace(self.a_ball, 2.5 * self.a_ball, 2001)
        worst = 0.0
        for r in rs:
            beta, dbeta = self._phi_profile(float(r))
            worst = max(worst, abs(dbeta), beta / float(r))
        return worst


def jordan_model(
    block: str | None = "real",
    size: int = 2,
    eigenvalue: int = 1,
    theta: float = 0.0,
    tail: Sequence[float] = (),
    c: float = 1.0,
    a_ball: float = 0.5,
    halfwidth: float | None = None,
) -> JordanModel:
    """Construct a Jordan-block model (see JordanModel for the map definition)."""
    tail = tuple(float(t) for t in tail)
    for t in tail:
        if abs(t) < 1e-9 or abs(abs(t) - 1.0) < 1e-9:
            raise ValueError("tail entries must have modulus away from 0 and 1")
    if c < 0:
        raise ValueError("nonlinearity scale c must be >= 0")
    if a_ball <= 0:
        raise ValueError("a_ball must be positive")
    if block == "real":
        b = real_jordan_block(size, eigenvalue)
    elif block == "rotation":
        b = rotation_jordan_block(size, theta)
    elif block is None:
        if not tail:
            raise ValueError("a model without a block needs a nonempty tail")
        b = np.zeros((0, 0))
    else:
        raise ValueError(f"unknown block kind {block!r}")
    n_block = b.shape[0]
    a = np.zeros((n_block + len(tail), n_block + len(tail)))
    a[:n_block, :n_block] = b
    if tail:
        a[n_block:, n_block:] = np.diag(tail)
    if halfwidth is None:
        halfwidth = 4.0 * a_ball
    model = JordanModel(
        block=block,
        size=size,
        eigenvalue=int(eigenvalue),
        theta=float(theta),
        tail=tail,
        c=float(c),
        a_ball=float(a_ball),
        halfwidth=float(halfwidth),
        matrix=_frozen(a),
    )
    if model.c > 0.0:
        sigma_min = float(np.linalg.svd(a, compute_uv=False)[-1])
        if model.c * model._phi_lipschitz() >= 0.95 * sigma_min:
            raise ValueError(
                "nonlinearity scale too large for global invertibility; reduce c or a_ball"
            )
    return model


# ---------------------------------------------------------------------------
# perturbed toral automorphisms


def perturbed_toral(matrix, amplitude: float = 0.05) -> DiscreteSystem:
    """x -> M x + amplitude * g(x) (mod 1) with g_i(x) = sin(2 pi x_{i+1}) / (2 pi).

    The perturbation is 1-periodic and smooth; the amplitude must stay below
    the smallest singular value of M so the map remains a diffeomorphism.
    """
    base = toral_automorphism(matrix)
    m = base.matrix.astype(float)
    n = m.shape[0]
    amplitude = float(amplitude)
    sigma_min = float(np.linalg.svd(m, compute_uv=False)[-1])
    if not 0 <= amplitude < 0.9 * sigma_min:
        raise ValueError(f"amplitude must be in [0, {0.9 * sigma_min:.3f}) for invertibility")
    space = PhaseSpace.torus(n)
    shift = np.arange(1, n + 1) % n  # coordinate driving g_i

    def g(x: Array) -> Array:
        return np.sin(2.0 * math.pi * x[shift]) / (2.0 * math.pi)

    def dg(x: Array) -> Array:
        out = np.zeros((n, n))
        out[np.arange(n), shift] = np.cos(2.0 * math.pi * x[shift])
        return out

    def forward(x: Array) -> Array:
        return np.mod(m @ x + amplitude * g(x), 1.0)

    def jacobian(x: Array) -> Array:
        return m + amplitude * dg(x)

    def inverse(y: Array) -> Array:
        x = np.mod(np.linalg.solve(m, y), 1.0)
        for _ in range(100):
            r = forward(x) - y
            r -= np.round(r)
            if float(np.linalg.norm(r)) <= 1e-14:
                return x
            x = np.mod(x - np.linalg.solve(jacobian(x), r), 1.0)
        raise RuntimeError("inverse Newton iteration failed to converge")

    sys = DiscreteSystem(
        space=space,
        forward=forward,
        inverse=inverse,
        jacobian=jacobian,
        jacobian_inverse=lambda x: np.linalg.inv(jacobian(x)),
        norm_bound=float(np.linalg.norm(m, 2)) + amplitude,
        linear_matrix=None if amplitude > 0 else m,
    )
    return sys
