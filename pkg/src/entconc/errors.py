class ContractViolation(ValueError):
    """An operation was called outside its documented preconditions."""


class EngineSizeError(ContractViolation):
    """The requested register would not fit the dense simulator."""
