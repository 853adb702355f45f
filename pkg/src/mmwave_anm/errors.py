"""Exception types raised across the package."""


class InvalidDimensionError(ValueError):
    pass


class InvalidConfigurationError(ValueError):
    pass


class InvalidInputError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


class UndefinedMetricError(ValueError):
    pass
