"""Exception hierarchy shared by all latscatter modules."""


class LatscatterError(Exception):
    """Base class for every error raised by the package."""


# graph construction / combinatorics
class GraphValidationError(LatscatterError, ValueError):
    pass


class DuplicateVertex(GraphValidationError):
    pass


class DuplicateEdge(GraphValidationError):
    pass


class LoopEdge(GraphValidationError):
    pass


class NonpositiveWeight(GraphValidationError):
    pass


class IsolatedBoundaryVertex(GraphValidationError):
    pass


class UnknownVertex(LatscatterError, KeyError):
    pass


class EmptySubset(LatscatterError, ValueError):
    pass


class TooLargeForExhaustive(LatscatterError, ValueError):
    pass


class SearchBudgetExceeded(LatscatterError, RuntimeError):
    pass


# lattice perturbations
class EditTouchesBoundaryLayer(GraphValidationError):
    pass


class Disconnected(GraphValidationError):
    pass


# forward solvers
class PoleAtEnergy(LatscatterError, ArithmeticError):
    """The requested energy sits (numerically) on a pole of the map."""

    def __init__(self, energy, message=None):
        self.energy = energy
        super().__init__(message or f"energy {energy!r} is at a pole of the boundary map")


class ConditionC1Required(LatscatterError, ValueError):
    pass


class MapParseError(LatscatterError, ValueError):
    """A boundary-map CSV file is malformed."""


# inverse problems
class PoleTooClose(LatscatterError, RuntimeError):
    pass


class RankAmbiguous(LatscatterError, RuntimeError):
    pass


class BoundaryMismatch(LatscatterError, ValueError):
    pass


class BudgetTooLarge(LatscatterError, ValueError):
    pass


class NoMatch(LatscatterError, RuntimeError):
    pass


class NoConvergence(LatscatterError, RuntimeError):
    def __init__(self, residual, message=None):
        self.residual = residual
        super().__init__(message or f"no convergence, final residual {residual:.3e}")


class StructureMismatch(NoConvergence):
    pass


# metric graphs
class WronskianDrift(LatscatterError, ArithmeticError):
    pass


class EdgeDirichletEigenvalue(LatscatterError, ArithmeticError):
    pass


class SingularVertexSystem(LatscatterError, ArithmeticError):
    pass


# periodic lattices / scattering
class ThresholdEnergy(LatscatterError, ValueError):
    pass


class NotConverged(LatscatterError, RuntimeError):
    def __init__(self, residual, message=None):
        self.residual = residual
        super().__init__(message or f"extrapolation residual {residual:.3e} above tolerance")


class InteriorEigenvalue(LatscatterError, ArithmeticError):
    pass
