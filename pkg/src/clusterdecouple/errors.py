"""Exception hierarchy.

Domain errors mean the physics cannot proceed (the CLI maps them to exit
code 1); configuration errors mean the input itself is malformed (exit 2).
"""


class ClusterDecoupleError(Exception):
    """Base class for all package errors."""


class DomainError(ClusterDecoupleError):
    """The model is well formed but the requested computation is impossible."""


class ConfigError(ClusterDecoupleError, ValueError):
    """Malformed scenario configuration."""


class NotDecoupled(DomainError):
    def __init__(self, reports):
        self.reports = list(reports)
        pairs = ", ".join(f"({r.pair[0]},{r.pair[1]})" for r in self.reports)
        super().__init__(f"coupling pairs do not factorize: {pairs}")


class ImaginaryEffectiveFrequency(DomainError):
    def __init__(self, alpha, omega_bar_sq):
        self.alpha = alpha
        self.omega_bar_sq = omega_bar_sq
        super().__init__(
            f"cluster {alpha}: effective squared frequency {omega_bar_sq:.6g} < 0, "
            "relative motion is unbounded"
        )


class UnstableMode(DomainError):
    def __init__(self, eigenvalues):
        self.eigenvalues = list(eigenvalues)
        super().__init__(f"negative squared mode frequencies: {self.eigenvalues}")


class InconsistentShift(DomainError):
    """Singular stiffness with a linear force along a zero mode."""


class NonHarmonicInGroup(DomainError):
    def __init__(self, alpha, kind):
        self.alpha = alpha
        super().__init__(f"cluster {alpha} has in-group interaction '{kind}', not harmonic")


class NegativeSquaredFrequency(DomainError):
    def __init__(self, label, t, omega2):
        self.label = label
        self.t = t
        self.omega2 = omega2
        super().__init__(f"branch {label}: omega^2({t:.6g}) = {omega2:.6g} <= 0")


class StepSizeUnderflow(DomainError):
    def __init__(self, t, h):
        self.t = t
        self.h = h
        super().__init__(f"step size {h:.3g} underflowed at t = {t:.6g}")


class UnsupportedOrder(DomainError):
    """Closed form requested for a branch with imaginary Bessel order."""


class InvalidTrap(DomainError):
    """Coulomb anti-trapping exceeds the external confinement."""
