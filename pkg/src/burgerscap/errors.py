"""Exception types raised by the proof pipeline."""


class ProofError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ProofError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(ProofError, ValueError):
    """A documented precondition of an operation is violated."""


class SingularOrIllConditioned(ProofError):
    """A rigorous matrix inverse could not be certified."""


class StepFailure(ProofError):
    """A rigorous integration step could not be completed."""


class ValidationException(ProofError):
    """Tail validation hit a configuration it cannot handle with the current M."""


class ConfigurationError(ProofError, ValueError):
    """Invalid configuration, or a hard cap was exceeded."""


class ConstructionFailure(ProofError):
    """The absorbing set construction did not converge."""


class CandidateFailure(ProofError):
    """Newton iteration for an approximate fixed point broke down."""


class IllConditionedSpectrum(ProofError):
    """The approximate spectral coordinate change could not be verified."""


class CertificationFailure(ProofError):
    """No trapping region satisfying the inward-pointing condition was found."""


class GlobalInconclusive(ProofError):
    """Integration of the absorbing set did not reach the trapping region."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate
