"""Exception types shared across the package."""


class TaskMpcError(Exception):
    """Base class for all package-specific errors."""


class DuplicateStateName(TaskMpcError):
    """Two primitives declare a state component with the same name."""


class IncompatibleInputSpace(TaskMpcError):
    """Primitives or problems built over different input boxes cannot combine."""


class MissingDynamics(TaskMpcError):
    """An optimal control problem needs exactly one ego-dynamics primitive."""


class UnresolvedRead(TaskMpcError):
    """A primitive reads a state component the assembled problem does not have."""


class SchemaMismatch(TaskMpcError):
    """A state vector, input sequence, or trajectory does not fit the schema."""


class MissingTarget(TaskMpcError):
    """A primitive that tracks another vehicle was built without one."""


class NoAdjacentLane(TaskMpcError):
    """A lane-change command points off the edge of the road."""


class NonFiniteCost(TaskMpcError):
    """Sampled rollouts produced NaN or infinite cost; the setup is broken."""


class SpawnFailure(TaskMpcError):
    """Random episode placement could not satisfy the spacing constraints."""


class ApiError(TaskMpcError):
    """The chat-completions transport failed (timeout, auth, rate limit)."""


class ParseError(TaskMpcError):
    """No valid command token was found in a planner response."""


class MalformedTrace(TaskMpcError):
    """A trace file is corrupt beyond a truncated final line."""


class SchemaError(TaskMpcError):
    """A trace file declares an unknown schema version."""
