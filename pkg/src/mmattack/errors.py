"""Exception types shared across the package."""


class MmaError(Exception):
    """Base class for all package-specific errors."""


class ShapeError(MmaError):
    """Array shape incompatible with an operation; names the offending node."""


class GraphStateError(MmaError):
    """Compute graph used out of order, e.g. backward before forward."""


class DatasetError(MmaError):
    """Malformed dataset file or invalid dataset parameters."""


class ConfigError(MmaError):
    """Invalid or inconsistent configuration value."""


class OracleAccessError(MmaError):
    """Glass-box access was requested from an attack-mode oracle."""


class BudgetExhaustedError(MmaError):
    """Query budget exhausted; carries the ledger counts at failure time."""

    def __init__(self, message: str, query_count: int, setup_queries: int, attack_queries: int):
        super().__init__(message)
        self.query_count = query_count
        self.setup_queries = setup_queries
        self.attack_queries = attack_queries
