"""Exception taxonomy shared across the package."""


class SublineqError(Exception):
    """Base class for all library errors."""


class ConfigurationError(SublineqError, ValueError):
    """Invalid construction parameters or config input; message names the violated bound."""


class DomainError(SublineqError, ValueError):
    """Evaluation requested outside the kernel's domain."""


class EvaluationError(SublineqError, RuntimeError):
    """A pointwise evaluation failed; carries a witness point when available."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class DegenerateKernelError(SublineqError, RuntimeError):
    """All sampled kernel distances vanish, no quasi-metric structure to estimate."""


class DegenerateMeasureError(SublineqError, RuntimeError):
    """A measure is unusable for the requested operation (zero potential on its support, ...)."""


class NotApplicableError(SublineqError, RuntimeError):
    """The operation's hypotheses are not met (e.g. tail diagnostics on a bounded domain)."""


class InternalInvariantError(SublineqError, RuntimeError):
    """A mathematically guaranteed in-loop invariant failed; indicates broken inputs or a bug."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
