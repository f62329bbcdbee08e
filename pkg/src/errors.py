from typing import Optional


class DrmOptError(Exception):
    pass


class DomainError(DrmOptError, ValueError):
    pass


class NonDifferentiableError(DrmOptError, ValueError):
    pass


class DegenerateOracleError(DrmOptError, ValueError):
    pass


class DimensionMismatchError(DrmOptError, ValueError):
    pass


class NonFiniteUpdateError(DrmOptError, ArithmeticError):
    pass


class InsufficientDataError(DrmOptError, ValueError):
    pass


class ConfigError(DrmOptError, ValueError):

    def __init__(self, key: str, message: str, value: Optional[str] = None):
        self.key = key
        self.value = value
        detail = f"{key}: {message}"
        if value is not None:
            detail += f" (got {value!r})"
        super().__init__(detail)
