"""Exception hierarchy shared by every module of the package."""


class AocsiError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(AocsiError, ValueError):
    """A channel model failed validation."""


class NonStochasticRow(ModelError):
    def __init__(self, row: int, total: float):
        self.row = row
        self.total = total
        super().__init__(f"row {row} of the transition matrix sums to {total!r}, not 1")


class NegativeEntry(ModelError):
    def __init__(self, row: int, col: int, value: float):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"transition entry ({row}, {col}) = {value!r} is outside [0, 1]")


class ReliabilityOutOfRange(ModelError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"reliability[{index}] = {value!r} is outside [0, 1]")


class DimensionMismatch(ModelError):
    pass


class NoUniqueStationary(AocsiError):
    pass


class InvalidObservation(AocsiError, ValueError):
    pass


class InvalidRewardParams(AocsiError, ValueError):
    pass


class DeltaMaxTooSmall(AocsiError, ValueError):
    pass


class NotConverged(AocsiError):
    def __init__(self, iterations: int, residual: float, report=None):
        self.iterations = iterations
        self.residual = residual
        self.report = report
        super().__init__(
            f"relative value iteration stopped after {iterations} iterations "
            f"with residual {residual:.3e}"
        )


class NoStationary(AocsiError):
    pass


class InstanceTooLarge(AocsiError):
    pass


class PolicyStateMissing(AocsiError, KeyError):
    pass


class ConfigError(AocsiError):
    """Base for configuration problems; ``key`` names the offending key path."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
