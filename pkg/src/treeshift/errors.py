"""Exception hierarchy for treeshift."""


class TreeShiftError(Exception):
    """Base class for all treeshift errors."""


class SpecError(TreeShiftError, ValueError):
    """A tree, weight or sequence description is malformed."""


class EmptySpec(SpecError):
    pass


class CycleDetected(SpecError):
    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__(f"cycle detected through vertices {self.ids}")


class MultipleParents(SpecError):
    def __init__(self, vertex, parents):
        self.vertex = vertex
        self.parents = list(parents)
        super().__init__(f"vertex {vertex!r} listed as child of {self.parents}")


class DisconnectedSpec(SpecError):
    def __init__(self, ids):
        self.ids = list(ids)
        super().__init__(f"vertices not reachable from the root: {self.ids}")


class LeafBeforeTruncation(SpecError):
    def __init__(self, vertex, depth):
        self.vertex = vertex
        self.depth = depth
        super().__init__(f"vertex {vertex!r} at depth {depth} has no children and no tail rule")


class QTooSmall(SpecError):
    def __init__(self, q):
        self.q = q
        super().__init__(f"family parameter q must be >= 1, got {q}")


class SpecParseError(SpecError):
    pass


class IncompatibleSpecs(SpecError):
    pass


class DepthOutOfRange(TreeShiftError, IndexError):
    pass


class IndexOutOfRange(TreeShiftError, IndexError):
    pass


class UndecidableWithoutTail(TreeShiftError):
    """Raised when a quantity over the infinite tree cannot be fixed by the truncation.

    ``prefix_value`` carries the value certified by the truncation alone.
    """

    def __init__(self, message, prefix_value=None):
        self.prefix_value = prefix_value
        super().__init__(message)


class TruncationOverflow(TreeShiftError):
    pass


class EmptyChildList(TreeShiftError, ValueError):
    pass


class NotNonPeriodic(TreeShiftError):
    pass


class NotBalanced(TreeShiftError):
    pass


class NotIsometric(TreeShiftError):
    pass


class NotLeftInvertible(TreeShiftError):
    pass


class DimensionMismatch(TreeShiftError):
    pass


class MomentMismatch(TreeShiftError):
    pass


class RadiusExceeded(TreeShiftError):
    pass
