class AWCGAError(Exception):
    """Base class for errors raised by this package."""


class ProjectionError(AWCGAError):
    """The ell_r projection solver did not reach its optimality tolerance."""


class ContractViolation(AWCGAError):
    """A realization step broke one of the AWCGA step conditions.

    ``condition`` names the violated clause ("norm", "descent", "selection",
    "approximation" or "span"), ``step`` the iteration index and ``margin`` the
    signed slack (negative means violated).
    """

    def __init__(self, condition: str, step: int, margin: float, trace=None):
        self.condition = condition
        self.step = step
        self.margin = margin
        self.trace = trace
        super().__init__(f"step {step}: {condition} condition violated by {-margin:.3e}")


class BoundViolation(AWCGAError):
    """An observed quantity exceeded a bound that the theory guarantees."""


class ConfigError(AWCGAError):
    """A run configuration failed validation."""
