"""Exception types shared across the lab."""


class LabError(Exception):
    """Base class for all lab errors."""


class RejectedInput(LabError, ValueError):
    """An argument violates an operation's preconditions."""


class BudgetError(LabError):
    """The precision budget for an orbit computation is not met."""

    def __init__(self, message, minimal_precision=None):
        super().__init__(message)
        self.minimal_precision = minimal_precision


class ClassificationError(LabError):
    """Spectral classification was requested for a non-ergodic map."""


class CertificationError(LabError):
    """Exact and numeric spectral information disagree."""


class ConstructionError(LabError):
    """A constructive step (complements, offsets, games) could not complete."""

    def __init__(self, message, transcript=None):
        super().__init__(message)
        self.transcript = transcript


class ConfigurationError(LabError, ValueError):
    """Strategy or experiment configuration is inconsistent."""


class UnsupportedStructure(LabError):
    """The matrix has central Jordan blocks where rotation data is needed."""


class EstimationError(LabError):
    """No scale survived the reliability checks of an estimator."""


class IntegrityError(LabError):
    """Recomputing a stored result disagrees beyond its recorded error bounds."""


class RejectedCertificate(LabError):
    """A construction ran but its point failed a certification check."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate
