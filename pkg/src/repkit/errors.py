"""Exception hierarchy shared by all repkit modules."""


class RepkitError(Exception):
    """Base class for all toolkit errors."""


class InfeasiblePoint(RepkitError):
    """A point fails membership in the set it was claimed to belong to."""


class Infeasible(RepkitError):
    """A problem has an empty feasible set."""


class Unbounded(RepkitError):
    """A minimization problem is unbounded below.

    Carries a certified descent ray when the solver can produce one
    (``ray`` is a vector for finite LPs, a measure for grid LPs).
    """

    def __init__(self, message="problem is unbounded", ray=None):
        super().__init__(message)
        self.ray = ray


class NonConvergence(RepkitError):
    """An iterative solver hit its iteration cap before reaching tolerance.

    ``payload`` holds the last iterate and convergence trace so callers can
    inspect or emit partial results.
    """

    def __init__(self, message="iteration limit reached", payload=None):
        super().__init__(message)
        self.payload = payload


class NotSurjective(RepkitError):
    """An analysis operator expected to have full row rank does not."""


class NotDoublyStochastic(RepkitError):
    """Input matrix is not doubly stochastic within tolerance."""


class CombinatorialLimitExceeded(RepkitError):
    """An enumeration guard (support/sign sweep size) was violated."""


class EmptyDisk(RepkitError):
    """A measurement disk covers no pixel center."""


class KindMismatch(RepkitError):
    """Solution payload does not match the declared regularizer kind."""


class UnsupportedKind(RepkitError):
    """Unknown regularizer kind tag."""
