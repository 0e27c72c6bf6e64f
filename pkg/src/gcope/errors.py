"""Exception hierarchy shared across the package."""


class GcopeError(Exception):
    """Base class for all errors raised by this package."""


class MissingFile(GcopeError):
    pass


class IoError(GcopeError):
    pass


class IndexOutOfRange(GcopeError):
    pass


class ShapeMismatch(GcopeError):
    pass


class NonFiniteFeature(GcopeError):
    pass


class NonFiniteInput(GcopeError):
    pass


class NonFiniteActivation(GcopeError):
    pass


class NonFiniteUpdate(GcopeError):
    pass


class InvalidArgument(GcopeError):
    pass


class NoEdges(GcopeError):
    pass


class UnlabeledNode(GcopeError):
    pass


class ConvergenceFailure(GcopeError):
    pass


class DimensionMismatch(GcopeError):
    pass


class EmptyDatasetList(GcopeError):
    pass


class ZeroEmbedding(GcopeError):
    pass


class EmptySubset(GcopeError):
    pass


class EmptySplit(GcopeError):
    pass


class Diverged(GcopeError):
    pass


class InsufficientClassSupport(GcopeError):
    pass
