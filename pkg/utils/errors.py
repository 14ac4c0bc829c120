"""
Error types for the campaign allocation library.
Every failure raised by library code derives from CampaignError.
"""


class CampaignError(Exception):
    """Base class for all library errors."""
    pass


class DomainError(CampaignError, ValueError):
    """Raised when an argument lies outside its mathematical domain."""
    pass


class CapacityError(CampaignError):
    """Raised when an exhaustive routine is asked to exceed its size limit."""

    def __init__(self, what: str, size: int, limit: int):
        """Initialize capacity error."""
        super().__init__(f"{what} has size {size}, limit is {limit}")
        self.size = size
        self.limit = limit


class ConfigurationError(CampaignError):
    """Raised when the problem configuration does not support an operation."""
    pass


class ContractViolation(CampaignError):
    """Raised when a caller breaks an operation's precondition."""
    pass


class EdgeListParseError(CampaignError):
    """Raised for a malformed line in an edge list."""

    def __init__(self, line_number: int, line: str, reason: str):
        """Initialize parse error."""
        super().__init__(f"line {line_number}: {reason}: {line.strip()!r}")
        self.line_number = line_number


class SolverError(CampaignError):
    "Raised when the LP backend fails or returns an unusable solution."
    pass


class UnboundedError(SolverError):
    "Raised when the solution for given equations is unbounded."
    pass


class InfeasibleError(SolverError):
    "Raised when the solution for given equations is infeasible (has no solution)."
    pass
