"""Exception types shared across the package."""


class GridBarrierError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(GridBarrierError):
    """Operands have incompatible shapes."""


class SingularMatrix(GridBarrierError):
    """A pivot fell below the relative threshold during factorization."""


class NotATree(GridBarrierError):
    """The line list does not form a spanning tree rooted at the slack bus."""


class NonPositiveImpedance(GridBarrierError):
    """A line has non-positive resistance or reactance."""


class SingularKKT(GridBarrierError):
    """The saddle-point system for the barrier weights is singular."""


class DegenerateConstraint(GridBarrierError):
    """The attention row has no coupling to any unsaturated action."""


class NotActivated(GridBarrierError):
    """No voltage deviation reaches its limit; the controller stays idle."""


class Infeasible(GridBarrierError):
    """No point in the actuator box satisfies the voltage constraints."""


class MaxPivots(GridBarrierError):
    """The active-set solver exceeded its pivot budget."""


class ScenarioError(GridBarrierError):
    """Base class for scenario file problems. Carries file/line context."""

    def __init__(self, message: str, path: str = "<scenario>", line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


class ParseError(ScenarioError):
    """The scenario file is syntactically malformed or has unknown keys."""


class ValidationError(ScenarioError):
    """The scenario file parsed but violates a semantic invariant."""
