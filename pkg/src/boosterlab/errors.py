"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A function was called with arguments outside its contract."""


class NormalizationError(RuntimeError):
    """Level alignment could not be performed (e.g. silent input)."""


class ScheduleError(RuntimeError):
    """A schedule file or participant plan is malformed or inconsistent."""


class ScreeningError(RuntimeError):
    """Dummy-trial screening could not be applied to the given records."""


class StatsError(RuntimeError):
    """A statistical routine received degenerate input."""
