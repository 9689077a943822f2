"""Exception hierarchy shared by all wrinklemap modules."""


class WrinkleMapError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(WrinkleMapError, ValueError):
    """An argument violates an operation's preconditions."""


class DegenerateShapeError(InvalidInputError):
    """A landmark shape has no spatial extent (all points coincide)."""


class DegenerateGeometryError(InvalidInputError):
    """A destination triangle of a piecewise-affine warp has zero area."""

    def __init__(self, message, triangle_index=None, vertices=None):
        super().__init__(message)
        self.triangle_index = triangle_index
        self.vertices = vertices


class CorruptAssetError(WrinkleMapError):
    """The region-mask asset is missing, unreadable or inconsistent."""


class OutOfRangeError(InvalidInputError):
    """A value (typically an age) lies outside its admissible range."""


class UndefinedCorrelationError(WrinkleMapError, ArithmeticError):
    """Pearson correlation requested on data with zero variance."""


class ManifestError(WrinkleMapError):
    """The dataset manifest cannot be parsed or validated."""
