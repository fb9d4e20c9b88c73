"""Exception types raised across the package."""


class ContractError(ValueError):
    """A precondition on an argument was violated."""


class HypothesisViolation(ValueError):
    """Kernel or friction data fails the standing hypotheses."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class BlowUpError(FloatingPointError):
    """A field became non-finite or exceeded the blow-up threshold."""

    def __init__(self, message, field=None, step=None, t=None):
        super().__init__(message)
        self.field = field
        self.step = step
        self.t = t


class StepFailure(RuntimeError):
    """The implicit friction solve did not converge."""

    def __init__(self, message, step=None, t=None):
        super().__init__(message)
        self.step = step
        self.t = t


class NumericalFailure(RuntimeError):
    """A dense linear-algebra kernel failed (singular system, no convergence)."""


class ConfigError(ValueError):
    """Malformed configuration input."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
