"""Exception hierarchy for shadowlab.

Every operation that can fail for a domain reason raises a subclass of
ShadowlabError carrying a short machine-readable ``code`` in addition to the
human message, so the CLI can surface failures verbatim.
"""

from __future__ import annotations


class ShadowlabError(Exception):
    """Base class for all shadowlab domain errors."""

    code = "error"


class OrbitEscapeError(ShadowlabError):
    """An iterate left the Euclidean bounding box."""

    code = "orbit-escape"

    def __init__(self, step: int, point=None):
        self.step = step
        self.point = point
        super().__init__(f"orbit escaped the bounding box at step {step}")


class ConstraintViolatedError(ShadowlabError):
    """A witness construction violated its size constraint."""

    code = "constraint-violated"


class NotAnOrbitError(ShadowlabError):
    """A splice segment is not an exact orbit segment."""

    code = "not-an-orbit"


class NotPeriodicError(ShadowlabError):
    """The supplied point is not periodic with the stated period."""

    code = "not-periodic"


class NonhyperbolicOrbitError(ShadowlabError):
    """A periodic orbit has a unit-modulus multiplier where hyperbolicity is required."""

    code = "nonhyperbolic-orbit"


class PullbackFailedError(ShadowlabError):
    """The pullback step of the displacement witness could not be made small."""

    code = "pullback-failed"


class VectorNotUnstableError(ShadowlabError):
    """The supplied vector does not lie in the unstable subspace."""

    code = "vector-not-unstable"


class SingularJacobianError(ShadowlabError):
    """The cyclic linearization of the shadow equations is numerically singular."""

    code = "singular-jacobian"


class NonhyperbolicMonodromyError(ShadowlabError):
    """I - A^Q is numerically singular in the closed-form cyclic solve."""

    code = "nonhyperbolic-monodromy"


class DegenerateMatrixError(ShadowlabError):
    """det(M^m - I) = 0, so the periodic-point congruence is degenerate."""

    code = "degenerate"


class InapplicableError(ShadowlabError):
    """The requested bound does not apply to this model configuration."""

    code = "inapplicable"


class ConfigError(ShadowlabError):
    """Experiment configuration is malformed; carries file path and line."""

    code = "config"

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:" if line is None else f"{path}:{line}: "
        super().__init__(f"{where}{message}")
