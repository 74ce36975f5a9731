"""Exception hierarchy with machine-parsable categories.

The CLI maps each category to a distinct exit code and prints a single
``error: category=<name>: <message>`` line on stderr, so wrappers can
branch on failures without parsing prose.
"""


class DptransError(Exception):
    """Base class; ``category`` drives the CLI exit code."""

    category = "runtime"


class ConfigError(DptransError):
    category = "config"


class DatasetError(DptransError):
    category = "dataset"


class SamplingError(DptransError):
    """Numerical failure inside a sampler (e.g. stick residual underflow)."""

    category = "sampling"


class DiagnosticsError(DptransError):
    category = "diagnostics"


class AttemptsExhausted(SamplingError):
    """Accept-reject proposal budget used up without an acceptance."""

    def __init__(self, attempts: int, message: str = ""):
        self.attempts = attempts
        super().__init__(message or f"no acceptance within {attempts} proposals")


EXIT_CODES = {
    "config": 2,
    "dataset": 3,
    "sampling": 4,
    "diagnostics": 5,
    "runtime": 1,
}
