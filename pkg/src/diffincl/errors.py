"""Exception hierarchy for the package."""


class InclusionError(Exception):
    """Base class for all errors raised by diffincl."""


class GeometryError(InclusionError, ValueError):
    """Invalid or degenerate region geometry."""


class ParameterError(InclusionError, ValueError):
    """Invalid model parameters or violated operation precondition."""


class BlowUpError(InclusionError):
    """Field evaluation became non-finite or the state left the guard ball."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class NoEventError(InclusionError):
    """No event was detected before the time budget ran out."""


class WindowError(InclusionError, ValueError):
    """A time lies outside the stored solution window."""


class ConcatenationError(InclusionError):
    """Paths do not join at a junction, or the junction needs a forbidden switch."""

    def __init__(self, message, junction=None):
        super().__init__(message)
        self.junction = junction


class SearchExhaustedError(InclusionError):
    """Path search gave up; ``frontier`` lists what was tried."""

    def __init__(self, message, frontier=None):
        super().__init__(message)
        self.frontier = list(frontier or [])


class ClosureError(InclusionError):
    """A loop construction did not return to its base point."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap
