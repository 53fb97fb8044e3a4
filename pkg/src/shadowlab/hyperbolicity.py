"""Analysis of periodic orbits: multipliers, splittings, expansion certificates.

The monodromy of a period-m orbit is the ordered Jacobian product
Df(p_{m-1}) ... Df(p_0).  Its spectrum splits the tangent space into stable
and unstable invariant subspaces (computed from a sorted real Schur form, so
complex pairs stay together and the bases are real and orthonormal).

The expansion certificate attaches to an unstable vector the per-step growth
rates lambda_i, the normalizing constant tau, and the coefficient sequence
a_0 = tau, a_{i+1} = lambda_i a_i - 1, which telescopes to a_m = 0.  Products
of the rates are then checked against the uniform lower bound curve
(1 / (16 L)) (1 + 1 / (8 L))^i.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import schur
from scipy.stats import qmc, norm as _norm_dist

from . import _intmat
from .errors import (
    DegenerateMatrixError,
    NonhyperbolicOrbitError,
    NotPeriodicError,
    VectorNotUnstableError,
)
from .systems import DiscreteSystem, orbit_segment

Array = np.ndarray

UNIT_MODULUS_BAND = 1e-6
PERIODICITY_TOL = 1e-8


@dataclass(frozen=True)
class PeriodicOrbitRecord:
    """Monodromy data of a periodic orbit.

    ``index`` counts multipliers of modulus > 1 and equals the dimension of
    the unstable subspace when the orbit is hyperbolic.  The bases are
    orthonormal and invariant under the monodromy to within 1e-8.
    """

    point: Array
    period: int
    points: Array  # (m, n) orbit
    jacobians: Array  # (m, n, n) per-step Jacobians
    monodromy: Array
    multipliers: Array  # complex, sorted by decreasing modulus
    index: int
    hyperbolic: bool
    stable_basis: Array  # (n, dim S)
    unstable_basis: Array  # (n, dim U)


@dataclass(frozen=True)
class ExpansionCertificate:
    """Per-orbit expansion data for one unstable vector.

    ``products[i]`` is lambda_0 * ... * lambda_{i-1} (empty product 1), the
    factor by which the i-th differential stretches the chosen vector.
    ``displacement`` is only set by the pullback witness constructor and holds
    the periodic tangent displacement sequence w_i.
    """

    rates: Array  # lambda_0 .. lambda_{m-1}
    tau: float
    coefficients: Array  # a_0 .. a_m
    products: Array  # length m
    displacement: Array | None = None
    pullback_steps: int | None = None

    @property
    def period(self) -> int:
        return len(self.rates)

    def bound_curve(self, constant: float) -> Array:
        i = np.arange(self.period)
        return (1.0 / (16.0 * constant)) * (1.0 + 1.0 / (8.0 * constant)) ** i


def expansion_tau(rates) -> float:
    """tau = (lam_{m-1}..lam_1 + lam_{m-1}..lam_2 + ... + lam_{m-1} + 1) / (lam_{m-1}..lam_0)."""
    rates = np.asarray(rates, dtype=float)
    m = len(rates)
    numerator = 0.0
    for j in range(1, m + 1):
        numerator += float(np.prod(rates[j:m]))
    return numerator / float(np.prod(rates))


def expansion_coefficients(rates, tau: float) -> Array:
    """a_0 = tau, a_{i+1} = lambda_i a_i - 1; telescopes to a_m = 0 exactly."""
    rates = np.asarray(rates, dtype=float)
    a = np.empty(len(rates) + 1)
    a[0] = tau
    for i, lam in enumerate(rates):
        a[i + 1] = lam * a[i] - 1.0
    return a


def _split_basis(monodromy: Array, where: str, band: float) -> Array:
    if where == "stable":
        sort = lambda x, y: np.hypot(x, y) < 1.0 - band  # noqa: E731
    else:
        sort = lambda x, y: np.hypot(x, y) > 1.0 + band  # noqa: E731
    _, z, sdim = schur(monodromy, output="real", sort=sort)
    return z[:, :sdim]


def _orbit_jacobians(sys: DiscreteSystem, points: Array) -> Array:
    return np.stack([sys.jacobian(p) for p in points])


def analyze_periodic_orbit(sys: DiscreteSystem, p: Array, m: int) -> PeriodicOrbitRecord:
    """Monodromy, multipliers, index and stable/unstable splitting at f^i(p).

    ``m`` need not be the minimal period.  A unit-modulus multiplier (within
    1e-6) yields hyperbolic=False, which is a result, not an error.
    """
    if m < 1:
        raise ValueError("period must be >= 1")
    p = sys.space.wrap(np.asarray(p, dtype=float))
    pts = orbit_segment(sys, p, 0, m)  # includes f^m(p) for the periodicity check
    if sys.space.dist(pts[m], p) > PERIODICITY_TOL:
        raise NotPeriodicError(
            f"f^{m}(p) is {sys.space.dist(pts[m], p):.3e} away from p (tolerance {PERIODICITY_TOL})"
        )
    pts = pts[:m]
    jacs = _orbit_jacobians(sys, pts)
    monodromy = np.eye(sys.dim)
    for a in jacs:
        monodromy = a @ monodromy
    multipliers = np.linalg.eigvals(monodromy)
    order = np.lexsort((multipliers.imag, multipliers.real, -np.abs(multipliers)))
    multipliers = multipliers[order]
    moduli = np.abs(multipliers)
    hyperbolic = bool(np.all(np.abs(moduli - 1.0) >= UNIT_MODULUS_BAND))
    band = 0.0 if hyperbolic else UNIT_MODULUS_BAND
    stable = _split_basis(monodromy, "stable", band)
    unstable = _split_basis(monodromy, "unstable", band)
    for basis in (stable, unstable):
        if basis.shape[1]:
            image = monodromy @ basis
            residual = image - basis @ (basis.T @ image)
            if np.linalg.norm(residual) > 1e-8 * max(1.0, np.linalg.norm(monodromy)):
                raise RuntimeError("invariant subspace residual too large; eigensolver failure")
    return PeriodicOrbitRecord(
        point=pts[0],
        period=m,
        points=pts,
        jacobians=jacs,
        monodromy=monodromy,
        multipliers=multipliers,
        index=int(np.sum(moduli > 1.0 + (0.0 if hyperbolic else UNIT_MODULUS_BAND))),
        hyperbolic=hyperbolic,
        stable_basis=stable,
        unstable_basis=unstable,
    )


def unstable_projection_residual(record: PeriodicOrbitRecord, v: Array) -> float:
    """Relative distance of v from the unstable subspace."""
    v = np.asarray(v, dtype=float)
    u = record.unstable_basis
    if u.shape[1] == 0:
        return 1.0
    r = v - u @ (u.T @ v)
    return float(np.linalg.norm(r) / np.linalg.norm(v))


def expansion_certificate(
    sys: DiscreteSystem | None, record: PeriodicOrbitRecord, v_u: Array
) -> ExpansionCertificate:
    """Growth rates along the orbit for an unstable vector, with the
    telescoping coefficient sequence (a_m = 0 is asserted to 1e-9).

    ``sys`` is accepted for interface symmetry with the other orbit
    operations; all data comes from the record's stored Jacobians.
    """
    if not record.hyperbolic:
        raise VectorNotUnstableError("orbit is not hyperbolic")
    v_u = np.asarray(v_u, dtype=float)
    if np.linalg.norm(v_u) == 0.0:
        raise VectorNotUnstableError("unstable vector must be nonzero")
    if unstable_projection_residual(record, v_u) > 1e-8:
        raise VectorNotUnstableError("vector does not lie in the unstable subspace")
    m = record.period
    rates = np.empty(m)
    v = v_u / np.linalg.norm(v_u)
    for i in range(m):
        w = record.jacobians[i] @ v
        rates[i] = np.linalg.norm(w)
        v = w / rates[i]
    tau = expansion_tau(rates)
    coeff = expansion_coefficients(rates, tau)
    if abs(coeff[m]) > 1e-9:
        raise RuntimeError(f"telescoping failure: a_m = {coeff[m]:.3e}")
    products = np.concatenate(([1.0], np.cumprod(rates[: m - 1])))
    return ExpansionCertificate(rates=rates, tau=tau, coefficients=coeff, products=products)


def verify_growth_bound(data: ExpansionCertificate, constant: float) -> bool:
    """True iff products[i] > (1/(16 L)) (1 + 1/(8 L))^i for all i < m."""
    if constant < 1.0:
        raise ValueError("the certificate constant must be >= 1")
    return bool(np.all(data.products > data.bound_curve(constant)))


@dataclass(frozen=True)
class HyperbolicityConstants:
    """Empirical uniform constants: |Df^j v| <= C lam^j |v| on stable vectors
    (and symmetrically under Df^{-j} on unstable ones).  Fitted over a finite
    horizon and finite vector sample; never a certificate."""

    growth_constant: float  # C
    rate: float  # lam in (0, 1)


def _unit_sphere_sample(dim: int, count: int) -> Array:
    """Deterministic low-discrepancy sample of the unit sphere in R^dim."""
    if dim == 1:
        return np.array([[1.0]])
    raw = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]  # drop the origin-ish point
    gauss = _norm_dist.ppf(np.clip(raw, 1e-12, 1.0 - 1e-12))
    return gauss / np.linalg.norm(gauss, axis=1, keepdims=True)


def extract_uniform_constants(
    sys: DiscreteSystem, records: list[PeriodicOrbitRecord], horizon: int, samples: int = 100
) -> HyperbolicityConstants:
    """Fit the smallest (C, lam) consistent with the sampled orbit data.

    g(j) tracks the worst stretch of stable sample vectors under Df^j and of
    unstable ones under Df^{-j}; then lam = max_j g(j)^(1/j) and
    C = max_j g(j) / lam^j.
    """
    if not records:
        raise ValueError("empty input: need at least one orbit record")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if any(not r.hyperbolic for r in records):
        raise ValueError("all records must be hyperbolic")
    g = np.zeros(horizon + 1)
    g[0] = 1.0
    for record in records:
        m = record.period
        for basis, backward in ((record.stable_basis, False), (record.unstable_basis, True)):
            k = basis.shape[1]
            if k == 0:
                continue
            vecs = (basis @ _unit_sphere_sample(k, samples).T).T  # rows: unit vectors
            if backward:
                jac_seq = [
                    sys.jacobian_inverse(record.points[(m - 1 - j) % m]) for j in range(horizon)
                ]
            else:
                jac_seq = [record.jacobians[j % m] for j in range(horizon)]
            current = vecs.copy()
            for j in range(1, horizon + 1):
                current = current @ jac_seq[j - 1].T
                g[j] = max(g[j], float(np.max(np.linalg.norm(current, axis=1))))
    with np.errstate(divide="ignore"):
        lam = float(np.max(g[1:] ** (1.0 / np.arange(1, horizon + 1))))
    lam = min(lam, 1.0 - 1e-12)
    c = float(np.max(g / lam ** np.arange(horizon + 1)))
    return HyperbolicityConstants(growth_constant=c, rate=lam)


@dataclass(frozen=True)
class SplittingAngles:
    """Minimum gap beta = min |v_s - v_u| over unit stable/unstable vectors,
    per orbit point, computed from principal angles: beta = sqrt(2 - 2 cos(theta_min))."""

    per_point: Array
    minimum: float


def subspace_angle(record: PeriodicOrbitRecord) -> SplittingAngles:
    if not record.hyperbolic:
        raise NonhyperbolicOrbitError("splitting angle requires a hyperbolic orbit")
    m = record.period
    betas = np.empty(m)
    for i in range(m):
        # monodromy based at f^i(p); its Schur splitting gives the bases there
        monodromy = np.eye(record.points.shape[1])
        for j in range(m):
            monodromy = record.jacobians[(i + j) % m] @ monodromy
        s = _split_basis(monodromy, "stable", 0.0)
        u = _split_basis(monodromy, "unstable", 0.0)
        if s.shape[1] == 0 or u.shape[1] == 0:
            betas[i] = 2.0  # one side empty: the minimum over pairs is vacuous
            continue
        sigma = np.linalg.svd(s.T @ u, compute_uv=False)
        cos_min_angle = min(1.0, float(sigma[0]))
        betas[i] = np.sqrt(max(0.0, 2.0 - 2.0 * cos_min_angle))
    return SplittingAngles(per_point=betas, minimum=float(np.min(betas)))


# ---------------------------------------------------------------------------
# exact enumeration of periodic points of toral automorphisms


def enumerate_periodic_points_exact(matrix, m: int) -> list[tuple[Fraction, ...]]:
    """All x in [0,1)^n with M^m x = x (mod 1), as exact rationals.

    Solved through the Smith normal form of M^m - I; the count equals
    |det(M^m - I)| and the list is sorted lexicographically.
    """
    a = _intmat.int_matrix(matrix)
    if m < 1:
        raise ValueError("period must be >= 1")
    n = len(a)
    d = _intmat.mat_sub(_intmat.mat_power(a, m), _intmat.identity(n))
    if _intmat.det(d) == 0:
        raise DegenerateMatrixError("det(M^m - I) = 0: the periodic-point set is degenerate")
    _, s, v = _intmat.smith_normal_form(d)
    orders = [s[i][i] for i in range(n)]
    points: list[tuple[Fraction, ...]] = []
    counters = [0] * n

    def emit():
        y = [Fraction(counters[i], orders[i]) for i in range(n)]
        x = [sum(Fraction(v[i][j]) * y[j] for j in range(n)) % 1 for i in range(n)]
        points.append(tuple(x))

    while True:
        emit()
        for i in range(n):
            counters[i] += 1
            if counters[i] < orders[i]:
                break
            counters[i] = 0
        else:
            break
    points.sort()
    return points


def enumerate_periodic_points_toral(matrix, m: int) -> Array:
    """Float version of enumerate_periodic_points_exact (same ordering)."""
    pts = enumerate_periodic_points_exact(matrix, m)
    return np.array([[float(c) for c in p] for p in pts])


# ---------------------------------------------------------------------------
# reports


def _fmt(x: float) -> str:
    return repr(float(x))


def _growth_verdict(record: PeriodicOrbitRecord, constant: float) -> str:
    """holds | fails for the expansion certificate along the first unstable
    direction; n/a when there is no unstable direction."""
    if not record.hyperbolic or record.unstable_basis.shape[1] == 0:
        return "n/a"
    cert = expansion_certificate(None, record, record.unstable_basis[:, 0])
    return "holds" if verify_growth_bound(cert, constant) else "fails"


def format_orbit_report(
    records: list[PeriodicOrbitRecord], growth_constant: float = 1.0
) -> str:
    """Structured text report, one section per orbit: period, multipliers,
    index, splitting gap and the growth-check verdict."""
    lines = []
    for k, r in enumerate(records):
        lines.append(f"orbit {k}")
        lines.append(f"  point      {' '.join(_fmt(c) for c in r.point)}")
        lines.append(f"  period     {r.period}")
        mult = ", ".join(
            f"{z.real:.12g}{z.imag:+.12g}j" if z.imag else f"{z.real:.12g}" for z in r.multipliers
        )
        lines.append(f"  multipliers {mult}")
        lines.append(f"  index      {r.index}")
        lines.append(f"  hyperbolic {'yes' if r.hyperbolic else 'no'}")
        if r.hyperbolic:
            angles = subspace_angle(r)
            lines.append(f"  beta_min   {_fmt(angles.minimum)}")
        lines.append(f"  growth-check (constant {growth_constant:g}) "
                     f"{_growth_verdict(r, growth_constant)}")
        lines.append("")
    return "\n".join(lines)


def orbit_csv_rows(
    records: list[PeriodicOrbitRecord], growth_constant: float = 1.0
) -> list[list[str]]:
    rows = [
        ["period", "index", "hyperbolic", "modulus_max", "modulus_min", "beta_min", "growth_ok"]
    ]
    for r in records:
        moduli = np.abs(r.multipliers)
        beta = _fmt(subspace_angle(r).minimum) if r.hyperbolic else ""
        rows.append(
            [
                str(r.period),
                str(r.index),
                "true" if r.hyperbolic else "false",
                _fmt(moduli.max()),
                _fmt(moduli.min()),
                beta,
                _growth_verdict(r, growth_constant),
            ]
        )
    return rows
