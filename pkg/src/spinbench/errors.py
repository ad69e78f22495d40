"""Exception hierarchy shared across the workbench."""


class SpinbenchError(Exception):
    """Base class for all workbench errors."""


class InvalidInputError(SpinbenchError):
    """A precondition on user-supplied data was violated."""


class GridTooSmallError(SpinbenchError):
    """Probability density reached the periodic boundary; the run is invalid."""

    def __init__(self, t: float, boundary_fraction: float):
        self.t = t
        self.boundary_fraction = boundary_fraction
        super().__init__(
            f"boundary density fraction {boundary_fraction:.3e} exceeded 1e-10 "
            f"of peak at t={t:.6g}; enlarge the grid or shorten the run"
        )


class InternalConsistencyError(SpinbenchError):
    """A numerical invariant (norm conservation, etc.) was violated."""


class UnresolvedRunError(SpinbenchError):
    """Too many trajectories ended unresolved or escaped."""

    def __init__(self, unresolved: int, escaped: int, total: int):
        self.unresolved = unresolved
        self.escaped = escaped
        self.total = total
        super().__init__(
            f"{unresolved} unresolved and {escaped} escaped trajectories out of "
            f"{total} exceed the allowed fraction"
        )


class InvalidPairingError(SpinbenchError):
    """Two ensemble partitions built from different hidden samples were combined."""


class NodeEvaluationError(SpinbenchError):
    """Spin projection requested at a point where the density vanishes."""
