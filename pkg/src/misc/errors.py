from typing import Optional


class EnergyHarvestingError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code: int = 4


class ConfigError(EnergyHarvestingError, ValueError):
    """Invalid scenario, schema violation or invalid policy/scenario pairing."""

    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class DomainError(EnergyHarvestingError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractViolation(EnergyHarvestingError, AssertionError):
    """A caller broke a precondition (programming error)."""


class MultichainError(EnergyHarvestingError):
    """Policy evaluation system is singular."""

    def __init__(self, message: str = "") -> None:
        super().__init__(f"MULTICHAIN: {message}" if message else "MULTICHAIN")


class CheckViolation(EnergyHarvestingError):
    """A structural or optimality check found violations."""

    exit_code = 3
