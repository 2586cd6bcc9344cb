"""Exception types shared across the package."""


class ViscostringError(Exception):
    """Base class for library-specific failures."""


class ExceptionalIndexError(ViscostringError):
    """A mode index collides with the damping rate, so its oscillation
    frequency sqrt(n^2 - alpha^2) vanishes and the oscillator representation
    breaks down for that mode."""

    def __init__(self, n: int, alpha: float):
        self.n = n
        self.alpha = alpha
        super().__init__(
            f"mode n={n} is exceptional for alpha={alpha!r}: "
            "sqrt(n^2 - alpha^2) = 0"
        )


class NearSingularGramError(ViscostringError):
    """The Gram matrix of the moment-kernel family is numerically singular.

    At a fixed truncation this signals loss of the lower frame bound, which
    happens when the control horizon is too short for the family to be a
    Riesz sequence.
    """

    def __init__(self, lambda_min: float, lambda_max: float):
        self.lambda_min = lambda_min
        self.lambda_max = lambda_max
        super().__init__(
            f"Gram matrix near singular: lambda_min={lambda_min:.3e}, "
            f"lambda_max={lambda_max:.3e}"
        )


class ElasticDegeneracyError(ViscostringError):
    """Deformation/stress pair targets are unreachable without memory.

    With a vanishing memory kernel the stress coefficients equal the
    deformation coefficients identically, so any pair of targets that
    differ cannot be met.
    """


class CrossCheckError(ViscostringError):
    """The two independent constructions of a moment kernel disagreed
    beyond the accepted quadrature tolerance."""
