"""Exception hierarchy shared by every stage of the pipeline."""


class RebalanceError(ValueError):
    """Base class for all contract violations raised by this package."""


class NotBinary(RebalanceError):
    pass


class EmptyClass(RebalanceError):
    pass


class ClassTooSmall(RebalanceError):
    pass


class DistanceMismatch(RebalanceError):
    pass


class NotEnoughNeighbors(RebalanceError):
    pass


class AllNominal(RebalanceError):
    pass


class Degenerate(RebalanceError):
    pass


class SvmDiverged(RebalanceError):
    pass


class IllConditioned(RebalanceError):
    pass


class Diverged(RebalanceError):
    pass


class UndefinedAuc(RebalanceError):
    pass


class DimensionMismatch(RebalanceError):
    pass


class ImageError(RebalanceError):
    pass


class ConfigError(RebalanceError):
    pass
