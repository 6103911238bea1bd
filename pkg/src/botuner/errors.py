"""Exception types shared across the package."""


class TunerError(Exception):
    """Base class for all botuner errors."""


class KnobDomainError(TunerError):
    """A configuration value or query point falls outside the knob space."""


class NumericalError(TunerError):
    """A numerical routine failed beyond recoverable tolerance."""


class WorkerSaturatedError(TunerError):
    """Submission attempted while every worker slot is busy."""


class NoRunningJobsError(TunerError):
    """Clock advance requested with nothing in flight."""


class UntrainedModelError(TunerError):
    """Point prediction requested from a model that has not been trained yet.

    Callers are expected to bypass the constraint gate instead of predicting.
    """


class TargetError(TunerError):
    """A black-box evaluation failed (bad exit, timeout, unparseable output)."""

    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message)
        self.diagnostics = diagnostics


class SettingsError(TunerError):
    """Campaign or executor settings violate a documented constraint."""
