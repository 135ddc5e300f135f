"""Exception types raised across the package."""


class PcmanipError(Exception):
    """Base class for all package-specific errors."""


# --- matrix construction / core math ---

class NonSquareError(PcmanipError):
    pass


class OrderTooSmallError(PcmanipError):
    pass


class NonPositiveEntryError(PcmanipError):
    pass


class ReciprocityViolationError(PcmanipError):
    """Raised when c_ij * c_ji deviates from 1; carries the worst offending pair."""

    def __init__(self, i, j, product):
        self.i = i
        self.j = j
        self.product = product
        super().__init__(
            f"reciprocity violated at ({i}, {j}): c_ij * c_ji = {product!r}"
        )


class ZeroWeightError(PcmanipError):
    pass


class NoConvergenceError(PcmanipError):
    def __init__(self, max_iter, residual):
        self.max_iter = max_iter
        self.residual = residual
        super().__init__(
            f"power iteration did not converge in {max_iter} iterations "
            f"(residual {residual:.3e})"
        )


class MissingRandomIndexError(PcmanipError):
    def __init__(self, n):
        self.n = n
        super().__init__(f"no random index available for order n={n}")


class DimensionMismatchError(PcmanipError):
    pass


# --- attacks ---

class PromotedEqualsReferenceError(PcmanipError):
    pass


# --- dataset generation / persistence ---

class DegeneratePerturbationError(PcmanipError):
    pass


class EmptySplitError(PcmanipError):
    pass


class FormatVersionMismatchError(PcmanipError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"dataset format version {found}, expected {expected}")


class CorruptSampleError(PcmanipError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"corrupt sample at line {line}: {reason}")


# --- network engine ---

class ShapeMismatchError(PcmanipError):
    pass


class DivergedLossError(PcmanipError):
    def __init__(self, epoch):
        self.epoch = epoch
        super().__init__(f"training loss diverged (non-finite) at epoch {epoch}")


class EmptySetError(PcmanipError):
    pass


class ChecksumMismatchError(PcmanipError):
    pass


class SpecMismatchError(PcmanipError):
    pass
