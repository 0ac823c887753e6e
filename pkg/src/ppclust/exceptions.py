"""Exception hierarchy shared by every module of the package."""


class PointPatternError(ValueError):
    """Base class for all errors raised by ppclust."""


class DimensionMismatchError(PointPatternError):
    pass


class NonFiniteCoordinateError(PointPatternError):
    pass


class LabelLengthMismatchError(PointPatternError):
    pass


class EmptyDatasetError(PointPatternError):
    pass


class ParseError(PointPatternError):
    """Malformed dataset or matrix file; ``line`` is 1-based (0 if not line-specific)."""

    def __init__(self, message, line=0):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class NonSquareError(PointPatternError):
    pass


class NegativeCostError(PointPatternError):
    pass


class InvalidOrderError(PointPatternError):
    pass


class InvalidCutoffError(PointPatternError):
    pass


class PairwiseDistanceError(PointPatternError):
    """Wraps an element-level failure with the indices of the offending pair."""

    def __init__(self, i, j, cause):
        self.i, self.j = i, j
        super().__init__(f"patterns ({i}, {j}): {cause}")


class AllInfiniteError(PointPatternError):
    pass


class NoExemplarError(PointPatternError):
    pass


class ZeroDensityError(PointPatternError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"pattern {index}: {message}")


class DegenerateComponentError(PointPatternError):
    def __init__(self, component, iteration=None, reason="zero effective mass"):
        self.component = component
        self.iteration = iteration
        where = f"component {component}"
        if iteration is not None:
            where += f" at iteration {iteration}"
        super().__init__(f"{where}: {reason}")


class InitFailureError(PointPatternError):
    pass


class LengthMismatchError(PointPatternError):
    pass


class TooFewError(PointPatternError):
    pass
