"""Exception types shared across the package."""


class FracctrlError(Exception):
    """Base class for all package errors."""


class DomainError(FracctrlError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AccuracyError(FracctrlError, RuntimeError):
    """A requested accuracy could not be certified.

    Carries the best achievable bound in ``best_bound`` when known.
    """

    def __init__(self, message, best_bound=None):
        super().__init__(message)
        self.best_bound = best_bound


class AssemblyError(FracctrlError, RuntimeError):
    """A numerically assembled object failed its structural checks."""


class ConfigError(FracctrlError, ValueError):
    """An experiment configuration failed validation.

    ``errors`` holds every problem found, each as ``"field.path: message"``.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
