"""Domain errors raised by gammakit.

Every mathematical precondition failure derives from :class:`GammaError`, which
is itself a ``ValueError`` so callers that only catch builtins still see bad
input as bad input. The CLI maps ``GammaError`` to exit code 2.
"""


class GammaError(ValueError):
    """Base class for all gammakit domain errors."""


class CommutatorTooLarge(GammaError):
    """The two operators of a pair do not commute within tolerance."""


class NotAContraction(GammaError):
    """``I - P*P`` has an eigenvalue clearly below zero."""


class RankDeficientInconsistent(GammaError):
    """``S - S*P`` has mass outside the defect block, so no fundamental operator exists."""


class JointDiagonalizationFailed(GammaError):
    """No random combination ``S + mu P`` produced a validated joint eigenbasis."""


class SpectralGapTooSmall(GammaError):
    """An eigenvalue of ``P`` sits too close to the unit circle to split reliably."""


class NotUnitary(GammaError):
    pass


class NotNormal(GammaError):
    pass


class SpectrumTouchesCircle(GammaError):
    pass


class DegenerateSlices(GammaError):
    """The polynomial vanishes identically on every slice of the scan family."""


class NumericalGCDUnstable(GammaError):
    """Slice GCD degrees disagree on too many slices."""


class BandUnsafe(GammaError):
    """Probe degree plus polynomial degree exceeds the model truncation."""


class PointNotOnDistinguishedBoundary(GammaError):
    pass


class AnnihilationPreconditionFailed(GammaError):
    """The product of the factors does not annihilate the pair."""


class ResidualTooLarge(GammaError):
    """A restricted pair is not annihilated by its factor."""


class IncompleteDecomposition(GammaError):
    """Parts overlap, are empty, or fail to exhaust the space."""
