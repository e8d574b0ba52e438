EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_DATA = 4


class VStarError(Exception):
    exit_code = 1


class GeometryError(VStarError, ValueError):
    exit_code = EXIT_DATA


class HeatmapError(VStarError, ValueError):
    exit_code = EXIT_DATA


class DataError(VStarError):
    """A scene, params, fixation, config or trace file could not be used."""

    exit_code = EXIT_DATA


class BackendError(VStarError):
    """The perception or VQA backend failed to answer."""

    exit_code = EXIT_BACKEND


class SearchInterrupted(BackendError):
    def __init__(self, message, trace, cause=None):
        super().__init__(message)
        self.trace = trace
        self.cause = cause


class SealError(BackendError):
    def __init__(self, message, vwm, traces=()):
        super().__init__(message)
        self.vwm = vwm
        self.traces = list(traces)


class SearchError(VStarError, ValueError):
    """A search result was used in a way its outcome does not allow."""

    exit_code = EXIT_DATA
