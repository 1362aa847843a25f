"""Exception hierarchy shared by all modules."""


class TreeDesignError(Exception):
    """Base class for every error raised by this package."""


# -- topology ---------------------------------------------------------------

class TopologyError(TreeDesignError, ValueError):
    pass


class CycleDetected(TopologyError):
    pass


class MultipleRoots(TopologyError):
    pass


class DanglingParent(TopologyError):
    pass


class ZeroRate(TopologyError):
    pass


class LeafWithPredecessors(TopologyError):
    pass


class UnknownNode(TopologyError, KeyError):
    pass


class IsFusionCenter(TopologyError):
    pass


class NotAPredecessor(TopologyError):
    pass


class WrongTopology(TopologyError):
    pass


# -- probability models -----------------------------------------------------

class BadProbabilityVector(TreeDesignError, ValueError):
    pass


class DimensionMismatch(TreeDesignError, ValueError):
    pass


class BadBinCount(TreeDesignError, ValueError):
    pass


class UnsupportedHypothesisCount(TreeDesignError, ValueError):
    pass


# -- decision functions / design --------------------------------------------

class IndexOutOfRange(TreeDesignError, IndexError):
    pass


class BadCoordinate(TreeDesignError, ValueError):
    pass


class MissingStrategy(TreeDesignError, KeyError):
    pass


class BudgetExceeded(TreeDesignError, RuntimeError):
    pass
