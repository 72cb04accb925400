EXIT_USAGE = 2
EXIT_COMPATIBILITY = 3
EXIT_NUMERICAL = 4


class EmtcError(Exception):
    """Base class of every error raised by the toolkit."""
    exit_code = EXIT_NUMERICAL


class ParameterError(EmtcError, ValueError):
    exit_code = EXIT_USAGE


class ShapeError(ParameterError):
    pass


class GeometryError(ParameterError):
    pass


class UnsupportedConfigurationError(ParameterError):
    pass


class RangeError(ParameterError):
    pass


class ConfigurationError(ParameterError):
    pass


class NetworkConfigError(ParameterError):
    pass


class DanglingNodeError(NetworkConfigError):
    pass


class DuplicateIdError(NetworkConfigError):
    pass


class DisconnectedNetworkError(NetworkConfigError):
    pass


class UnknownKeyError(NetworkConfigError):
    pass


class CompatibilityError(EmtcError):
    exit_code = EXIT_COMPATIBILITY


class DigestMismatchError(CompatibilityError):

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"network digest mismatch: database {expected:016x}, measurement {actual:016x}")


class SingularFrequencyError(EmtcError):
    pass


class TopologyError(EmtcError):
    pass


class FitError(EmtcError):
    pass


class DetectionFailureError(EmtcError):
    pass


class DegenerateGeometryError(EmtcError):
    pass


class DatabaseFormatError(EmtcError):
    exit_code = EXIT_COMPATIBILITY


def status_code_for(error: EmtcError) -> int:
    """HTTP status matching an error's CLI exit code."""
    return {EXIT_USAGE: 400, EXIT_COMPATIBILITY: 409}.get(error.exit_code, 422)
