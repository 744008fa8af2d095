"""Exception hierarchy shared by every module of the package."""


class LimidError(Exception):
    """Base class for all package errors."""


class InvalidDiagramError(LimidError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid influence diagram: {lines}")


class SizeLimitError(LimidError):
    """An enumeration would exceed its configured cap."""


class TrivialDiagramError(LimidError):
    """All utility entries are equal, so every strategy is optimal."""

    def __init__(self, value, utility_count):
        self.value = value
        self.utility_count = utility_count
        super().__init__(f"trivial diagram: every utility entry equals {value}")


class ContractError(LimidError):
    """A precondition of an operation was violated by the caller."""


class InvalidAssignmentError(LimidError):
    """A solver assignment cannot be mapped back to a pure strategy."""


class SolverError(LimidError):
    """The LP solver failed numerically."""


class DocumentError(LimidError):
    """A JSON document does not follow the expected schema."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
