"""Periodic pseudotrajectories and their witness constructions.

A periodic pseudotrajectory is one period x_0 .. x_{Q-1} of points; its
defect is the largest cyclic gap max_i dist(f(x_i), x_{(i+1) mod Q}).

Witness constructions defeat any fixed Lipschitz shadowing constant at a
nonhyperbolic fixed point of a Jordan-block model:

* the staircase drives the unit-eigenvalue coordinate up for K steps by d/2
  and back down for K steps, peaking at K d / 2;
* the size-2 (and general size-l) unit Jordan witnesses drive the top block
  coordinate to K d, then retire the coordinates one by one back to zero, so
  the period is Q = 2 K + K^2 for l = 2 with structure constants
  Z1(K) = K (K - 1) / 2 and Z2(K) = K^2;
* the rotation-block witness drives the last 2-plane with unit impulses
  rotated in step with the block (isometric driving), peaks at magnitude K d,
  mirrors the driving to unwind, and retires the remaining planes pairwise;
* the orbit displacement (pullback) witness perturbs a hyperbolic periodic
  orbit along its unstable direction with coefficients a_i and returns through
  an n-fold inverse-monodromy pullback, staying step-wise within 2 of the
  linearized push-forward.

In the exactly linear regime the real-block constructions are carried out on
integer coefficient vectors, so the closure y_Q = y_0 is exact and every
point equals d times an integer vector bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import (
    ConstraintViolatedError,
    NonhyperbolicOrbitError,
    NotAnOrbitError,
    PullbackFailedError,
)
from .hyperbolicity import (
    ExpansionCertificate,
    analyze_periodic_orbit,
    expansion_certificate,
)
from .systems import DiscreteSystem, JordanModel, ToralAutomorphism

Array = np.ndarray

SEGMENT_GAP_TOL = 1e-8


def _frozen(a: Array) -> Array:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PeriodicPseudotrajectory:
    """One period of points with its measured defect (never declared)."""

    points: Array  # (Q, n), read-only
    defect: float
    kind: str = "custom"
    params: dict | None = None

    @property
    def period(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class WitnessMeta:
    """Construction record: the kind plus every parameter needed to rebuild it."""

    kind: str
    period: int
    params: dict


def defect(sys: DiscreteSystem, points: Array) -> float:
    """Largest cyclic gap max_i dist(f(x_i), x_{(i+1) mod Q}); 0 iff an exact orbit."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 1:
        raise ValueError("need at least one point")
    if sys.linear_matrix is not None:
        images = sys.space.wrap(pts @ sys.linear_matrix.T)
    else:
        images = np.stack([sys.space.wrap(sys.forward(p)) for p in pts])
    gaps = sys.space.diff(np.roll(pts, -1, axis=0), images)
    return float(np.max(np.linalg.norm(gaps, axis=1)))


def make_pseudotrajectory(
    sys: DiscreteSystem, points: Array, kind: str = "custom", params: dict | None = None
) -> PeriodicPseudotrajectory:
    pts = sys.space.wrap(np.atleast_2d(np.asarray(points, dtype=float)))
    return PeriodicPseudotrajectory(
        points=_frozen(pts), defect=defect(sys, pts), kind=kind, params=dict(params or {})
    )


# ---------------------------------------------------------------------------
# witnesses on Jordan-block models


def _require_real_unit_block(model: JordanModel, op: str) -> None:
    if model.block != "real":
        raise ValueError(f"{op} needs a real Jordan block model, got {model.block!r}")
    if model.eigenvalue != 1:
        raise ValueError(f"{op} is implemented for eigenvalue +1 only")


def _int_block_matrix(l: int) -> list[list[int]]:
    return [[1 if i == j else (1 if j == i + 1 else 0) for j in range(l)] for i in range(l)]


def _embed(coeffs: list[list[int]], scale: float, dim: int) -> Array:
    """points[k] = scale * coeffs[k] on the block coordinates, zero tail."""
    pts = np.zeros((len(coeffs), dim))
    block = np.array(coeffs, dtype=float)
    pts[:, : block.shape[1]] = scale * block
    return pts


def _check_core_ball(model: JordanModel, pts: Array) -> None:
    # exactness of the construction needs the linear branch; vacuous when c = 0
    if model.c == 0.0:
        return
    peak = float(np.max(np.linalg.norm(pts, axis=1)))
    if peak > model.a_ball:
        raise ConstraintViolatedError(
            f"witness points reach |v| = {peak:.3g} > a_ball = {model.a_ball:.3g}; "
            "shrink d or enlarge the linear core"
        )


def _real_block_coefficients(l: int, k_steps: int) -> tuple[list[list[int]], list[int]]:
    """Integer coefficient path of the general unit-block witness.

    Drive the top coordinate up then down for k_steps each, then retire
    coordinates l-2 .. 0; returns one period of coefficient vectors and the
    per-phase step counts.
    """
    b = _int_block_matrix(l)
    c = [0] * l
    coeffs: list[list[int]] = []
    lengths: list[int] = []

    def apply(axis: int, sign: int, count: int) -> None:
        nonlocal c
        for _ in range(count):
            coeffs.append(c[:])
            c = [sum(b[i][j] * c[j] for j in range(l)) for i in range(l)]
            c[axis] += sign
        lengths.append(count)

    apply(l - 1, +1, k_steps)
    apply(l - 1, -1, k_steps)
    for axis in range(l - 2, -1, -1):
        apply(axis, -1, c[axis])
    if any(c):
        raise RuntimeError(f"witness failed to close: residual coefficients {c}")
    return coeffs, lengths


def witness_eigenvalue_one(
    model: JordanModel, d: float, k_steps: int
) -> tuple[PeriodicPseudotrajectory, WitnessMeta]:
    """Staircase witness along the unit eigendirection.

    2K-periodic: K steps of +d/2 along the eigenvector followed by K steps of
    -d/2, peaking at K d / 2.  Requires K d < 2 a_ball.
    """
    _require_real_unit_block(model, "the staircase witness")
    if d <= 0 or k_steps < 1:
        raise ValueError("need d > 0 and K >= 1")
    if k_steps * d >= 2.0 * model.a_ball:
        raise ConstraintViolatedError(
            f"K d = {k_steps * d:.3g} must stay below 2 a_ball = {2 * model.a_ball:.3g}"
        )
    # integer path in units of d/2: +1 for K steps, -1 for K steps along e_0
    coeffs = [[k] + [0] * (model.size - 1) for k in range(k_steps)]
    coeffs += [[k_steps - k] + [0] * (model.size - 1) for k in range(k_steps)]
    pts = _embed(coeffs, d / 2.0, model.dim)
    _check_core_ball(model, pts)
    xi = make_pseudotrajectory(
        model.system, pts, kind="staircase", params={"d": d, "K": k_steps}
    )
    meta = WitnessMeta(
        kind="staircase",
        period=2 * k_steps,
        params={"d": d, "K": k_steps, "peak": k_steps * d / 2.0},
    )
    return xi, meta


def witness_jordan_general(
    model: JordanModel, d: float, k_steps: int
) -> tuple[PeriodicPseudotrajectory, WitnessMeta]:
    """Unit-block witness for any block size l >= 1 (step magnitude d)."""
    _require_real_unit_block(model, "the unit-block witness")
    if d <= 0 or k_steps < 1:
        raise ValueError("need d > 0 and K >= 1")
    coeffs, lengths = _real_block_coefficients(model.size, k_steps)
    pts = _embed(coeffs, d, model.dim)
    _check_core_ball(model, pts)
    params = {
        "d": d,
        "K": k_steps,
        "l": model.size,
        "phase_lengths": " ".join(str(v) for v in lengths),
    }
    xi = make_pseudotrajectory(model.system, pts, kind="jordan-general", params=params)
    return xi, WitnessMeta(kind="jordan-general", period=len(coeffs), params=params)


def witness_jordan(
    model: JordanModel, d: float, k_steps: int
) -> tuple[PeriodicPseudotrajectory, WitnessMeta]:
    """Size-2 unit-block witness with its structure constants.

    Drives the second coordinate to K d, back to zero (first coordinate then
    sits at Z2(K) d = K^2 d), and retires the first coordinate, closing after
    Q = 2 K + K^2 steps.  Z1(K) = K (K - 1) / 2 is the first coordinate at
    step K; Y is the peak point norm in units of d.
    """
    if model.block != "real" or model.size != 2:
        raise ValueError("this witness needs a real unit Jordan block of size 2")
    _require_real_unit_block(model, "the size-2 unit-block witness")
    if d <= 0 or k_steps < 1:
        raise ValueError("need d > 0 and K >= 1")
    coeffs, lengths = _real_block_coefficients(2, k_steps)
    z1 = coeffs[k_steps][0]
    z2 = lengths[2]
    pts = _embed(coeffs, d, model.dim)
    _check_core_ball(model, pts)
    peak = max(math.hypot(*c) for c in coeffs)
    params = {
        "d": d,
        "K": k_steps,
        "Z1": z1,
        "Z2": z2,
        "Y": peak,
        "Q": len(coeffs),
    }
    xi = make_pseudotrajectory(model.system, pts, kind="jordan", params=params)
    return xi, WitnessMeta(kind="jordan", period=len(coeffs), params=params)


def witness_rotation(
    model: JordanModel, d: float, k_steps: int, w0: Sequence[float] = (1.0, 0.0)
) -> tuple[PeriodicPseudotrajectory, WitnessMeta]:
    """Rotation-block witness: isometric unit impulses in the last 2-plane.

    Phase 1 adds d R^k w for K steps (the driven plane magnitude grows exactly
    by d per step, peaking at K d), phase 2 subtracts the mirrored impulses,
    and the remaining planes are retired pairwise with impulses co-rotating
    with the block.  Every step has magnitude d, so the defect is d in the
    linear regime.  The retirement counts match the real-block case for every
    rotation angle.
    """
    if model.block != "rotation":
        raise ValueError("the rotation witness needs a rotation block model")
    if d <= 0 or k_steps < 1:
        raise ValueError("need d > 0 and K >= 1")
    w0 = np.asarray(w0, dtype=float)
    if w0.shape != (2,) or np.linalg.norm(w0) == 0:
        raise ValueError("w0 must be a nonzero 2-vector")
    w0 = w0 / np.linalg.norm(w0)
    theta = model.theta
    planes = model.size
    a = model.matrix
    n = model.dim
    alpha0 = math.atan2(w0[1], w0[0])

    y = np.zeros(n)
    pts: list[Array] = []
    lengths: list[int] = []

    def impulse(plane: int, angle: float, sign: float) -> Array:
        step = np.zeros(n)
        step[2 * plane] = sign * d * math.cos(angle)
        step[2 * plane + 1] = sign * d * math.sin(angle)
        return step

    def drive(plane: int, sign: float, count: int, angle_at) -> None:
        nonlocal y
        for i in range(count):
            pts.append(y.copy())
            y = a @ y + impulse(plane, angle_at(i), sign)
        lengths.append(count)

    last = planes - 1
    drive(last, +1.0, k_steps, lambda i: alpha0 + i * theta)
    drive(last, -1.0, k_steps, lambda i: alpha0 + (k_steps + i) * theta)
    for plane in range(planes - 2, -1, -1):
        z = y[2 * plane : 2 * plane + 2]
        rho = float(np.linalg.norm(z))
        count = int(round(rho / d))
        if abs(count - rho / d) > 1e-6:
            raise RuntimeError(
                f"retirement count for plane {plane} is not an integer multiple of d"
            )
        alpha = math.atan2(z[1], z[0])
        drive(plane, -1.0, count, lambda i: alpha + (i + 1) * theta)
    pts_arr = np.array(pts)
    closure = float(np.linalg.norm(y))
    scale = max(float(np.max(np.linalg.norm(pts_arr, axis=1))), d)
    if closure > 1e-9 * (1.0 + scale):
        raise RuntimeError(f"rotation witness failed to close: |y_Q| = {closure:.3e}")
    _check_core_ball(model, pts_arr)
    params = {
        "d": d,
        "K": k_steps,
        "theta": theta,
        "w0": f"{w0[0]!r} {w0[1]!r}",
        "phase_lengths": " ".join(str(v) for v in lengths),
    }
    xi = make_pseudotrajectory(model.system, pts_arr, kind="rotation", params=params)
    return xi, WitnessMeta(kind="rotation", period=len(pts), params=params)


# ---------------------------------------------------------------------------
# orbit displacement (pullback) witness around a hyperbolic periodic orbit


def witness_orbit_pullback(
    sys: DiscreteSystem,
    p: Array,
    m: int,
    v_u: Array,
    d: float,
    n_pullback: int = 1,
    max_pullback_tries: int = 1000,
) -> tuple[PeriodicPseudotrajectory, WitnessMeta, ExpansionCertificate]:
    """Displace a hyperbolic period-m orbit along its unstable direction.

    Builds the m(n+1)-periodic displacement sequence w_i (coefficients a_i on
    the unit unstable directions for one period, then an inverse-monodromy
    pullback B^{-n} tau e_0 pushed forward for the remaining n periods) and
    returns the pseudotrajectory x_i = p_i + d w_i.  The pullback depth n is
    raised from ``n_pullback`` until |B^{-n} tau e_0| < 1.

    Every step satisfies |w_{i+1} - A_i w_i| < 2, so the measured defect is
    below 2 d in the linear regime and at most 4 d for small d in general.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if n_pullback < 1:
        raise ValueError("n_pullback must be >= 1")
    record = analyze_periodic_orbit(sys, p, m)
    if not record.hyperbolic:
        raise NonhyperbolicOrbitError(
            "the monodromy has a unit-modulus multiplier; the displacement witness needs "
            "a hyperbolic orbit"
        )
    cert = expansion_certificate(sys, record, v_u)
    units = np.empty((m, sys.dim))
    units[0] = np.asarray(v_u, dtype=float) / np.linalg.norm(v_u)
    for i in range(1, m):
        w = record.jacobians[i - 1] @ units[i - 1]
        units[i] = w / np.linalg.norm(w)

    pullback = cert.tau * units[0]
    n = n_pullback
    for _ in range(n_pullback):
        pullback = np.linalg.solve(record.monodromy, pullback)
    tries = 0
    while float(np.linalg.norm(pullback)) >= 1.0:
        pullback = np.linalg.solve(record.monodromy, pullback)
        n += 1
        tries += 1
        if tries > max_pullback_tries:
            raise PullbackFailedError(
                f"|B^-n tau e_0| stayed >= 1 after {max_pullback_tries} extra pullbacks"
            )

    q = m * (n + 1)
    w_seq = np.empty((q, sys.dim))
    for i in range(m):
        w_seq[i] = cert.coefficients[i] * units[i]
    w_seq[m] = pullback
    for idx in range(m, q - 1):
        w_seq[idx + 1] = record.jacobians[(idx % m)] @ w_seq[idx]

    pts = np.empty((q, sys.dim))
    for i in range(q):
        pts[i] = sys.space.wrap(record.points[i % m] + d * w_seq[i])
    params = {"d": d, "m": m, "n_pullback": n, "Q": q, "tau": cert.tau}
    xi = make_pseudotrajectory(sys, pts, kind="pullback", params=params)
    meta = WitnessMeta(kind="pullback", period=q, params=params)
    full_cert = replace(cert, displacement=_frozen(w_seq), pullback_steps=n)
    return xi, meta, full_cert


# ---------------------------------------------------------------------------
# splices of exact orbit segments


def splice_cycle(sys: DiscreteSystem, segments: Sequence[Array]) -> PeriodicPseudotrajectory:
    """Concatenate exact orbit segments into one periodic pseudotrajectory.

    Interior gaps of each segment must not exceed 1e-8 (they are recomputed
    here); the defect of the result is then the largest junction gap.
    """
    if len(segments) == 0:
        raise ValueError("need at least one segment")
    cleaned = []
    for k, seg in enumerate(segments):
        seg = np.atleast_2d(np.asarray(seg, dtype=float))
        for i in range(seg.shape[0] - 1):
            gap = sys.space.dist(sys.space.wrap(sys.forward(seg[i])), seg[i + 1])
            if gap > SEGMENT_GAP_TOL:
                raise NotAnOrbitError(
                    f"segment {k} has interior gap {gap:.3e} at index {i} "
                    f"(tolerance {SEGMENT_GAP_TOL})"
                )
        cleaned.append(seg)
    points = np.vstack(cleaned)
    params = {"segment_lengths": " ".join(str(s.shape[0]) for s in cleaned)}
    return make_pseudotrajectory(sys, points, kind="splice", params=params)


def homoclinic_point(toral: ToralAutomorphism, shift: Sequence[int] = (0, 1)) -> Array:
    """A point of the 2-torus on both eigenlines of the fixed point 0.

    Solves t e_u = s e_s + shift for the integer translate ``shift``; the
    orbit of the returned point approaches 0 in both time directions.
    """
    m = toral.matrix.astype(float)
    if m.shape != (2, 2) or not toral.hyperbolic:
        raise ValueError("homoclinic construction needs a 2x2 hyperbolic automorphism")
    vals, vecs = np.linalg.eig(m)
    unstable = vecs[:, int(np.argmax(np.abs(vals)))].real
    stable = vecs[:, int(np.argmin(np.abs(vals)))].real
    coeffs = np.linalg.solve(np.column_stack([unstable, -stable]), np.asarray(shift, dtype=float))
    return np.mod(coeffs[0] * unstable, 1.0)


def perturb_orbit(
    sys: DiscreteSystem, orbit_points: Array, d: float, seed=0
) -> PeriodicPseudotrajectory:
    """Perturb an exact periodic orbit by deterministic uniform noise of size <= d.

    ``seed`` is anything numpy's default_rng accepts (int or sequence of ints).
    """
    pts = np.atleast_2d(np.asarray(orbit_points, dtype=float))
    rng = np.random.default_rng(seed)
    n = pts.shape[1]
    noisy = np.empty_like(pts)
    for i in range(pts.shape[0]):
        direction = rng.standard_normal(n)
        direction /= np.linalg.norm(direction)
        radius = d * rng.uniform() ** (1.0 / n)
        noisy[i] = sys.space.wrap(pts[i] + radius * direction)
    return make_pseudotrajectory(
        sys, noisy, kind="noise", params={"d": d, "seed": str(seed), "Q": pts.shape[0]}
    )


# ---------------------------------------------------------------------------
# serialization (round-trips bit-exactly through repr formatting)


def _format_param(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def save_pseudotrajectory(xi: PeriodicPseudotrajectory, path) -> None:
    """Write the CSV-like text format: header names, header values, one point per row."""
    params = xi.params or {}
    for key, value in params.items():
        text = _format_param(value)
        if any(ch in f"{key}{text}" for ch in ",;\n"):
            raise ValueError(f"parameter {key!r} contains a reserved character")
    header = ";".join(f"{k}={_format_param(v)}" for k, v in params.items())
    lines = ["Q,defect,kind,params", f"{xi.period},{xi.defect!r},{xi.kind},{header}"]
    for row in xi.points:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pseudotrajectory(path, sys: DiscreteSystem) -> PeriodicPseudotrajectory:
    """Read the format written by save_pseudotrajectory; the defect is recomputed."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if len(lines) < 3 or lines[0] != "Q,defect,kind,params":
        raise ValueError(f"{path}: not a pseudotrajectory file")
    q_str, _, kind, header = lines[1].split(",", 3)
    q = int(q_str)
    params: dict = {}
    if header:
        for item in header.split(";"):
            key, _, value = item.partition("=")
            params[key] = value
    points = np.array([[float(v) for v in ln.split(",")] for ln in lines[2 : 2 + q]])
    if points.shape[0] != q:
        raise ValueError(f"{path}: expected {q} points, found {points.shape[0]}")
    return make_pseudotrajectory(sys, points, kind=kind, params=params)
