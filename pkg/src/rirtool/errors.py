"""Exception hierarchy shared by the analysis modules."""


class RirError(Exception):
    """Base class for every analysis error raised by rirtool."""


# poly
class ZeroPolynomial(RirError):
    pass


class NonConvergence(RirError):
    pass


# tf
class PoleHit(RirError):
    pass


class AxisPole(RirError):
    pass


class Improper(RirError):
    pass


class PoleAtOrigin(RirError):
    pass


class CancellationDetected(RirError):
    """Plant and perturbation share a closed right-half-plane root."""

    def __init__(self, root, message=None):
        self.root = complex(root)
        super().__init__(message or f"unstable pole/zero cancellation at s = {self.root:.6g}")


# rir_fixed
class StableInput(RirError):
    pass


class ZeroAtOmega(RirError):
    pass


class PhaseSingular(RirError):
    pass


class NoStrictification(RirError):
    pass


class NoPositiveRoot(RirError):
    pass


class InconsistentSystem(RirError):
    pass


class NonPositiveSolution(RirError):
    pass


# rir_param
class OriginViolation(RirError):
    pass


class SmallGainViolated(RirError):
    pass


class NoStabilizingXi(RirError):
    pass


class EpsTooSmall(RirError):
    pass


class PreconditionError(RirError):
    """A documented precondition of an analysis routine does not hold."""


# models
class DomainError(RirError):
    pass


class NoBracket(RirError):
    pass


class NonUniqueEquilibrium(RirError):
    pass


class Divergence(RirError):
    pass


class WindowTooShort(RirError):
    pass
