"""Exception hierarchy shared by all subpackages."""


class EqYamabeError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(EqYamabeError, ValueError):
    """A model descriptor or parameter set is malformed."""


class SingularMetricError(EqYamabeError):
    """The metric is not invertible (or not positive) at a sample point.

    Attributes
    ----------
    index : tuple of int
        Grid index of the first offending point.
    point : tuple of float
        Coordinates of that point.
    """

    def __init__(self, message, index=None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point


class DegenerateTestFunctionError(EqYamabeError, ValueError):
    """A test function has vanishing ``L^p`` norm."""


class TubeRadiusError(EqYamabeError):
    """The tube radius is too large for a positive-definite tube metric."""

    def __init__(self, message, max_radius=None):
        super().__init__(message)
        self.max_radius = max_radius


class ShrinkTubeError(EqYamabeError):
    """The correction factor is not positive on the tube."""


class ProfileConstructionError(EqYamabeError):
    """A cutoff profile violates one of its derivative bounds."""

    def __init__(self, message, worst_point=None, worst_value=None):
        super().__init__(message)
        self.worst_point = worst_point
        self.worst_value = worst_value


class FeasibilityError(EqYamabeError):
    """Parameters admit no profile with the requested bounds."""

    def __init__(self, message, limit=None):
        super().__init__(message)
        self.limit = limit


class IncompatibleJetError(EqYamabeError):
    """Two metrics do not agree to first order on the core submanifold."""


class ConstructionError(EqYamabeError):
    """An iterative geometric construction failed."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class CertificationError(EqYamabeError):
    """A pointwise curvature certificate was violated.

    Attributes
    ----------
    report : dict
        The full report that failed.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvalidPerturbationError(EqYamabeError):
    """A metric perturbation destroys positive definiteness."""


class AssemblyError(EqYamabeError):
    """Region metrics disagree across a shared interface."""

    def __init__(self, message, interface=None):
        super().__init__(message)
        self.interface = interface


class ReductionError(EqYamabeError):
    """A reduced profile disagrees with the full-chart computation."""


class NonConvergenceError(EqYamabeError):
    """An iterative solver hit its iteration budget.

    Attributes
    ----------
    history : list of float
        Objective values recorded so far.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


class InvalidActionError(EqYamabeError):
    """Sampled group elements are not isometries of the metric."""
