"""Exception types shared across the library.

Most failures are misuse (bad shapes, bad parameters, bad config) and derive
from ValueError so that callers who do not care about the distinction can
catch the usual thing. Runtime aborts derive from RuntimeError.
"""


class InputError(ValueError):
    """Malformed data passed to an operation (shapes, NaNs, empty windows)."""


class ParameterError(ValueError):
    """A numeric parameter outside its legal range (radius <= 0, T too small)."""


class ConfigError(ValueError):
    """Experiment configuration file is missing keys or holds bad values."""


class UnsupportedSystemError(ValueError):
    """Controller synthesis requested for a system class we do not handle."""


class StabilizationError(ValueError):
    """A putative stabilizing controller fails certification."""


class FeedbackContractError(RuntimeError):
    """Bandit feedback violated its declared perturbation bound."""


class DegenerateScheduleError(RuntimeError):
    """An exploration radius underflowed; parameters are out of scope."""


class AuditError(RuntimeError):
    """A runtime invariant audit failed on a recorded trace."""
