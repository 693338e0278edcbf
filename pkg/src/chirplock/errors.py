"""Exception taxonomy.

ConfigError maps to CLI exit code 2, NumericalError and its subclasses to
exit code 3. A partially failed sweep is not an exception (exit code 4 is
decided by the command from per-point failure records).
"""


class ChirplockError(Exception):
    """Base class for all package errors."""


class ConfigError(ChirplockError):
    """Invalid or inconsistent run configuration."""


class ModelError(ChirplockError):
    """Unphysical model parameters (e.g. an inverted anharmonic ladder)."""


class DimensionError(ModelError):
    """Requested Hilbert space exceeds the configured maximum."""


class NumericalError(ChirplockError):
    """A numerical procedure failed to produce a trustworthy result."""


class LabelingError(NumericalError):
    """Eigenbranch continuation could not assign labels unambiguously."""


class TruncationError(NumericalError):
    """Photon-number truncation breached during time evolution."""

    def __init__(self, message: str, time: float, top_population: float):
        super().__init__(message)
        self.time = time
        self.top_population = top_population


class SpanError(NumericalError):
    """An S-curve does not span the probability range needed for a fit."""

    def __init__(self, message: str, p_min: float, p_max: float):
        super().__init__(message)
        self.p_min = p_min
        self.p_max = p_max


class BracketError(NumericalError):
    """A root or threshold search failed to bracket its target."""
