"""Exact periodic shadows of periodic pseudotrajectories and Lipschitz scans.

The solver runs damped Newton on the cyclic residual map

    G(z_0 .. z_{Q-1})_i = z_{i+1 mod Q} - f(z_i),

initialized at the pseudotrajectory.  Each Newton step solves the full cyclic
block-bidiagonal linear system with LU (dense for small problems, sparse
beyond), which is stable even when per-step Jacobian products over one period
are astronomically large.  A numerically singular cyclic linearization
signals nonhyperbolicity along the pseudotrajectory and raises
SingularJacobianError.

For globally linear maps the unique periodic solution of z_{i+1} = A z_i + e_i
is also computed in closed form by diagonalizing the cyclic shift with the
DFT: (w_j I - A) zhat_j = ehat_j over the Q-th roots of unity w_j.  This is
the independent oracle for the Newton path.  (Eliminating to
z_0 = (I - A^Q)^{-1} sum A^{Q-1-i} e_i and substituting forward computes the
same point in exact arithmetic but amplifies rounding by the expanding part
of A^Q, so the resolvent form is used.)
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from . import _intmat
from .errors import (
    InapplicableError,
    NonhyperbolicMonodromyError,
    ShadowlabError,
    SingularJacobianError,
)
from .hyperbolicity import enumerate_periodic_points_exact
from .pseudo import (
    PeriodicPseudotrajectory,
    make_pseudotrajectory,
    perturb_orbit,
    witness_jordan,
)
from .systems import DiscreteSystem, JordanModel, ToralAutomorphism, orbit_segment

Array = np.ndarray

DENSE_SOLVE_LIMIT = 2000  # unknowns; beyond this the cyclic solve goes sparse
SINGULAR_BLOWUP = 1e12


@dataclass(frozen=True)
class ShadowOptions:
    max_iterations: int = 100
    step_damping: float = 0.5
    tolerance: float = 1e-10


DEFAULT_OPTIONS = ShadowOptions()


@dataclass(frozen=True)
class ShadowSolution:
    """An exact periodic orbit near a pseudotrajectory.

    ``residual`` is the final max cyclic gap of the orbit equation;
    ``sup_distance`` the max distance to the shadowed pseudotrajectory and
    ``ratio`` its quotient by the pseudotrajectory defect.  ``minimal_period``
    divides the ansatz period Q.
    """

    orbit_point: Array
    period: int
    orbit: Array
    sup_distance: float
    ratio: float
    converged: bool
    residual: float
    iterations: int
    minimal_period: int


def _cyclic_residual(sys: DiscreteSystem, z: Array) -> Array:
    q = z.shape[0]
    r = np.empty_like(z)
    for i in range(q):
        r[i] = sys.space.diff(z[(i + 1) % q], sys.space.wrap(sys.forward(z[i])))
    return r


RCOND_FLOOR = 1e-13


def _estimate_rcond(matvec, solve, solve_t, size: int, sweeps: int = 6) -> float:
    """sigma_min / sigma_max estimate via power iteration (deterministic start)."""
    v = np.full(size, 1.0 / np.sqrt(size))
    v[::2] += 1e-3 / np.sqrt(size)  # break symmetry deterministically
    v /= np.linalg.norm(v)
    sigma_max = 1.0
    for _ in range(sweeps):
        w = matvec(v)
        sigma_max = float(np.linalg.norm(w))
        if sigma_max == 0.0:
            return 0.0
        v = w / sigma_max
    u = np.full(size, 1.0 / np.sqrt(size))
    u[1::2] -= 1e-3 / np.sqrt(size)
    u /= np.linalg.norm(u)
    inv_norm = 1.0
    for _ in range(sweeps):
        w = solve_t(solve(u))  # inverse power iteration on M^T M
        inv_norm = float(np.linalg.norm(w))
        if not np.isfinite(inv_norm):
            return 0.0  # garbage from a singular factor
        if inv_norm == 0.0:
            return 1.0  # inverse annihilates u: perfectly conditioned direction
        u = w / inv_norm
    sigma_min = inv_norm**-0.5
    return sigma_min / sigma_max


def _solve_cyclic(jacobians: Array, rhs: Array) -> Array:
    """Solve delta_{i+1 mod Q} - A_i delta_i = rhs_i for all i.

    Raises SingularJacobianError when the cyclic matrix is numerically
    singular (estimated reciprocal condition below 1e-13), which for a
    pseudotrajectory signals a unit-modulus direction of the linearization.
    """
    q, n = rhs.shape
    size = q * n
    if size <= DENSE_SOLVE_LIMIT:
        m = np.zeros((size, size))
        for i in range(q):
            row = slice(i * n, (i + 1) * n)
            nxt = slice(((i + 1) % q) * n, ((i + 1) % q + 1) * n)
            m[row, nxt] += np.eye(n)
            m[row, i * n : (i + 1) * n] -= jacobians[i]
        try:
            factor = scipy.linalg.lu_factor(m)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularJacobianError(str(exc)) from exc
        matvec = lambda v: m @ v  # noqa: E731
        solve = lambda v: scipy.linalg.lu_solve(factor, v)  # noqa: E731
        solve_t = lambda v: scipy.linalg.lu_solve(factor, v, trans=1)  # noqa: E731
    else:
        rows, cols, vals = [], [], []
        eye = np.eye(n)
        for i in range(q):
            r0 = i * n
            c_next = ((i + 1) % q) * n
            for a in range(n):
                for b in range(n):
                    rows.append(r0 + a)
                    cols.append(c_next + b)
                    vals.append(eye[a, b])
                    rows.append(r0 + a)
                    cols.append(i * n + b)
                    vals.append(-jacobians[i][a, b])
        m = scipy.sparse.csc_matrix((vals, (rows, cols)), shape=(size, size))
        try:
            lu = scipy.sparse.linalg.splu(m)
        except RuntimeError as exc:  # exactly singular factor
            raise SingularJacobianError(str(exc)) from exc
        matvec = lambda v: m @ v  # noqa: E731
        solve = lambda v: lu.solve(v)  # noqa: E731
        solve_t = lambda v: lu.solve(v, trans="T")  # noqa: E731
    with np.errstate(all="ignore"):
        rcond = _estimate_rcond(matvec, solve, solve_t, size)
        delta = solve(rhs.ravel())
    if not np.isfinite(rcond) or rcond < RCOND_FLOOR:
        raise SingularJacobianError(
            f"cyclic linearization is numerically singular (rcond ~ {rcond:.1e})"
        )
    if not np.all(np.isfinite(delta)):
        raise SingularJacobianError("cyclic linearization produced non-finite Newton step")
    scale = max(1.0, float(np.max(np.abs(rhs))))
    if float(np.max(np.abs(delta))) > SINGULAR_BLOWUP * scale:
        raise SingularJacobianError(
            "cyclic linearization is numerically singular (Newton step blow-up)"
        )
    return delta.reshape(q, n)


def _minimal_period(sys: DiscreteSystem, orbit: Array, tol: float = 1e-8) -> int:
    q = orbit.shape[0]
    for cand in range(1, q + 1):
        if q % cand:
            continue
        if all(sys.space.dist(orbit[(i + cand) % q], orbit[i]) <= tol for i in range(q)):
            return cand
    return q


def find_periodic_shadow(
    sys: DiscreteSystem,
    xi: PeriodicPseudotrajectory,
    options: ShadowOptions = DEFAULT_OPTIONS,
) -> ShadowSolution:
    """Damped Newton search for the exact Q-periodic orbit near ``xi``.

    Returns immediately (0 iterations) when the pseudotrajectory already
    satisfies the orbit equation.  On failure to converge the best iterate is
    returned with converged=False; a numerically singular cyclic linearization
    raises SingularJacobianError.
    """
    z = np.array(xi.points)
    best = z.copy()
    residual = float(np.max(np.linalg.norm(_cyclic_residual(sys, z), axis=1)))
    best_residual = residual
    iterations = 0
    while residual > options.tolerance and iterations < options.max_iterations:
        jacobians = np.stack([sys.jacobian(p) for p in z])
        rhs = -_cyclic_residual(sys, z)
        delta = _solve_cyclic(jacobians, rhs)
        step = 1.0
        improved = False
        while step > 2.0**-30:
            trial = np.stack([sys.space.wrap(p) for p in z + step * delta])
            trial_res = float(np.max(np.linalg.norm(_cyclic_residual(sys, trial), axis=1)))
            if trial_res < residual:
                z, residual = trial, trial_res
                improved = True
                break
            step *= options.step_damping
        iterations += 1
        if not improved:
            break
        if residual < best_residual:
            best, best_residual = z.copy(), residual
    orbit = best
    sup = max(sys.space.dist(orbit[i], xi.points[i]) for i in range(xi.period))
    if xi.defect > 0:
        ratio = sup / xi.defect
    else:
        ratio = 0.0 if sup == 0.0 else float("inf")
    return ShadowSolution(
        orbit_point=orbit[0],
        period=xi.period,
        orbit=orbit,
        sup_distance=sup,
        ratio=ratio,
        converged=bool(best_residual <= options.tolerance),
        residual=best_residual,
        iterations=iterations,
        minimal_period=_minimal_period(sys, orbit),
    )


# ---------------------------------------------------------------------------
# linear oracles


def closed_form_linear_shadow(matrix, gaps) -> Array:
    """Unique Q-periodic solution of z_{i+1} = A z_i + e_i for hyperbolic A.

    Computed by discrete Fourier diagonalization of the cyclic shift; raises
    NonhyperbolicMonodromyError when ||(I - A^Q)^{-1}|| exceeds 1e12.
    """
    a = np.asarray(matrix, dtype=float)
    e = np.atleast_2d(np.asarray(gaps, dtype=float))
    q, n = e.shape
    with np.errstate(over="ignore", invalid="ignore"):
        power = np.linalg.matrix_power(a, q)
    if np.all(np.isfinite(power)):
        sigma = np.linalg.svd(np.eye(n) - power, compute_uv=False)
        if sigma[-1] == 0.0 or 1.0 / sigma[-1] > SINGULAR_BLOWUP:
            raise NonhyperbolicMonodromyError(
                f"||(I - A^Q)^-1|| ~ "
                f"{np.inf if sigma[-1] == 0 else 1.0 / sigma[-1]:.2e} exceeds 1e12"
            )
    # float overflow in A^Q means the monodromy is astronomically expanding,
    # so (I - A^Q)^{-1} is negligible and the guard passes vacuously
    e_hat = np.fft.fft(e, axis=0)
    z_hat = np.empty_like(e_hat)
    eye = np.eye(n)
    for j in range(q):
        omega = np.exp(2j * np.pi * j / q)
        try:
            z_hat[j] = np.linalg.solve(omega * eye - a, e_hat[j])
        except np.linalg.LinAlgError as exc:
            # a singular resolvent means omega is a unit-modulus eigenvalue
            raise NonhyperbolicMonodromyError(
                f"spectrum touches the unit circle at angle 2 pi {j}/{q}"
            ) from exc
    z = np.fft.ifft(z_hat, axis=0)
    return np.real(z)


def theoretical_linear_lipschitz_bound(matrix, q: int) -> float:
    """max over Q-th roots of unity of ||(w I - A)^{-1}||, the sharp sup-norm
    constant of the cyclic linear solve in each Fourier mode."""
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    worst = 0.0
    for j in range(q):
        omega = np.exp(2j * np.pi * j / q)
        sigma = np.linalg.svd(omega * np.eye(n) - a, compute_uv=False)
        worst = max(worst, 1.0 / float(sigma[-1]))
    return worst


# ---------------------------------------------------------------------------
# lower bound at the size-2 unit Jordan block


def direct_shadow_lower_bound(model: JordanModel, xi: PeriodicPseudotrajectory) -> float:
    """Proven lower bound on the sup shadowing distance over ALL periodic
    orbits of the exactly linear model.

    Periodicity forces the second block coordinate of any periodic orbit to
    vanish (the second coordinate is preserved by the block and feeds the
    first, so a nonzero value drifts forever), hence
    eps* >= max_k |x_k^(2)|, which is K d for the size-2 witness.
    """
    if model.block != "real" or model.size < 2 or model.eigenvalue != 1:
        raise InapplicableError("the bound needs a real unit Jordan block of size >= 2")
    if model.c != 0.0:
        raise InapplicableError(
            "with c > 0 the argument is only asymptotic as d -> 0; "
            "set c = 0 for the exactly linear model"
        )
    return float(np.max(np.abs(xi.points[:, 1])))


# ---------------------------------------------------------------------------
# expansivity-style periodicity check


def verify_periodicity_by_expansivity(
    sys: DiscreteSystem, p: Array, mu: int, a: float, window: int
) -> bool:
    """Finite-window surrogate for the expansivity argument.

    True iff the orbits of p and q = f^mu(p) stay within ``a`` of each other
    for all |i| <= window AND dist(f^mu(p), p) <= 1e-8.  A finite window
    checks, it does not prove.
    """
    if a <= 0:
        raise ValueError("expansivity constant must be positive")
    if window < mu:
        raise ValueError("window must be >= the candidate period")
    try:
        pts = orbit_segment(sys, p, -window, window + mu)
    except ShadowlabError:
        return False
    offset = window
    if sys.space.dist(pts[offset + mu], pts[offset]) > 1e-8:
        return False
    for i in range(-window, window + 1):
        if sys.space.dist(pts[offset + i + mu], pts[offset + i]) > a:
            return False
    return True


# ---------------------------------------------------------------------------
# Lipschitz scans


@dataclass(frozen=True)
class ScanRow:
    defect: float
    epsilon_star: float  # nan when the solve failed
    ratio: float  # nan when the solve failed
    converged: bool
    lower_bound: float | None
    error: str | None = None


@dataclass(frozen=True)
class LipschitzScan:
    """Rows ordered by decreasing defect.

    ``estimated_constant`` is the sup of converged ratios (0 when none).
    ``diverging`` is set when converged ratios rise monotonically and at least
    double across the scan, or when solves fail while the certified lower
    bound keeps pace with the defect; no finite computation certifies
    unboundedness, so this is a verdict, not a proof.
    """

    rows: tuple[ScanRow, ...]
    estimated_constant: float
    diverging: bool


class ScanFamily(Protocol):
    def generate(self, d: float, row: int) -> PeriodicPseudotrajectory: ...


@dataclass(frozen=True)
class PerturbedOrbitFamily:
    """Uniform noise of size <= d applied to a fixed exact periodic orbit."""

    sys: DiscreteSystem
    orbit_points: Array
    seed: int = 0

    def generate(self, d: float, row: int) -> PeriodicPseudotrajectory:
        return perturb_orbit(self.sys, self.orbit_points, d, seed=(self.seed, row))


@dataclass(frozen=True)
class JordanWitnessFamily:
    """Size-2 unit-block witnesses at fixed K, one per defect level."""

    model: JordanModel
    k_steps: int

    def generate(self, d: float, row: int) -> PeriodicPseudotrajectory:
        return witness_jordan(self.model, d, self.k_steps)[0]

    def lower_bound(self, xi: PeriodicPseudotrajectory) -> float:
        return direct_shadow_lower_bound(self.model, xi)


@dataclass(frozen=True)
class ExactOrbitFamily:
    """Constant family returning one exact orbit regardless of d."""

    sys: DiscreteSystem
    orbit_points: Array

    def generate(self, d: float, row: int) -> PeriodicPseudotrajectory:
        return make_pseudotrajectory(self.sys, self.orbit_points, kind="exact")


def _diverging_verdict(rows: Sequence[ScanRow]) -> bool:
    ratios = [r.ratio for r in rows if r.converged and np.isfinite(r.ratio)]
    if len(ratios) >= 3:
        monotone = all(b >= a * (1.0 - 1e-9) for a, b in zip(ratios, ratios[1:]))
        if monotone and ratios[-1] >= 2.0 * ratios[0] > 0.0:
            return True
    failed = [r for r in rows if not r.converged]
    if failed and all(r.lower_bound is not None for r in failed):
        # certified ratio lower bounds that do not decay while the solver fails
        lb_ratios = [r.lower_bound / r.defect for r in failed if r.defect > 0]
        if lb_ratios and all(
            b >= a * (1.0 - 1e-9) for a, b in zip(lb_ratios, lb_ratios[1:])
        ):
            return True
    return False


def lipschitz_scan(
    sys: DiscreteSystem,
    family: ScanFamily,
    d_values: Sequence[float],
    options: ShadowOptions = DEFAULT_OPTIONS,
) -> LipschitzScan:
    """Generate, shadow and tabulate the family at each defect level.

    Rows keep the order of ``d_values`` (which must be positive and strictly
    decreasing, at least 3 of them); solver errors are recorded per row and
    are not fatal.
    """
    d_values = [float(d) for d in d_values]
    if len(d_values) < 3:
        raise ValueError("need at least 3 defect levels")
    if any(d <= 0 for d in d_values) or any(
        b >= a for a, b in zip(d_values, d_values[1:])
    ):
        raise ValueError("d values must be positive and strictly decreasing")
    rows: list[ScanRow] = []
    for idx, d in enumerate(d_values):
        xi = family.generate(d, idx)
        lower = None
        if hasattr(family, "lower_bound"):
            lower = float(family.lower_bound(xi))
        try:
            sol = find_periodic_shadow(sys, xi, options)
            rows.append(
                ScanRow(
                    defect=xi.defect,
                    epsilon_star=sol.sup_distance,
                    ratio=sol.ratio,
                    converged=sol.converged,
                    lower_bound=lower,
                    error=None if sol.converged else "no-convergence",
                )
            )
        except ShadowlabError as exc:
            rows.append(
                ScanRow(
                    defect=xi.defect,
                    epsilon_star=float("nan"),
                    ratio=float("nan"),
                    converged=False,
                    lower_bound=lower,
                    error=exc.code,
                )
            )
    converged_ratios = [r.ratio for r in rows if r.converged and np.isfinite(r.ratio)]
    estimated = max(converged_ratios) if converged_ratios else 0.0
    return LipschitzScan(
        rows=tuple(rows),
        estimated_constant=float(estimated),
        diverging=_diverging_verdict(rows),
    )


# ---------------------------------------------------------------------------
# exact base orbits on the torus


def toral_orbit_with_period(toral: ToralAutomorphism, period: int) -> Array:
    """An exact orbit of minimal period ``period``, chosen deterministically
    (lexicographically smallest starting point among the enumerated periodic
    points, verified in exact rational arithmetic)."""
    pts = enumerate_periodic_points_exact(toral.matrix, period)
    mat = _intmat.int_matrix(toral.matrix)
    powers = {
        div: _intmat.mat_power(mat, div)
        for div in range(1, period)
        if period % div == 0
    }
    for candidate in pts:
        minimal = True
        for power in powers.values():
            image = [
                sum(Fraction(power[i][j]) * candidate[j] for j in range(len(candidate))) % 1
                for i in range(len(candidate))
            ]
            if tuple(image) == candidate:
                minimal = False
                break
        if minimal:
            start = np.array([float(c) for c in candidate])
            return orbit_segment(toral.system, start, 0, period - 1)
    raise ValueError(f"no orbit of minimal period {period}")


# ---------------------------------------------------------------------------
# scan output


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def scan_csv_text(scan: LipschitzScan) -> str:
    lines = ["d,epsilon_star,ratio,converged,lower_bound"]
    for r in scan.rows:
        lines.append(
            ",".join(
                [
                    _fmt(r.defect),
                    _fmt(r.epsilon_star),
                    _fmt(r.ratio),
                    "true" if r.converged else "false",
                    _fmt(r.lower_bound),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_scan_csv(scan: LipschitzScan, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(scan_csv_text(scan))


def format_scan_table(scan: LipschitzScan) -> str:
    headers = ["d", "epsilon_star", "ratio", "converged", "lower_bound", "note"]
    body = [
        [
            _fmt(r.defect),
            _fmt(r.epsilon_star),
            _fmt(r.ratio),
            "true" if r.converged else "false",
            _fmt(r.lower_bound),
            r.error or "",
        ]
        for r in scan.rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    for row in body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    lines.append("")
    lines.append(f"estimated_constant  {_fmt(scan.estimated_constant)}")
    lines.append(f"diverging           {'true' if scan.diverging else 'false'}")
    return "\n".join(lines) + "\n"
