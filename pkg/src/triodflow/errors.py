"""Exception types shared across the package."""


class TriodflowError(Exception):
    """Base class for all package errors."""


class DegenerateElementError(TriodflowError):
    """A mesh segment collapsed below the minimal admissible chord length."""

    def __init__(self, element_index, curve_index=None, chord_length=None):
        self.element_index = element_index
        self.curve_index = curve_index
        self.chord_length = chord_length
        where = f"element {element_index}"
        if curve_index is not None:
            where = f"curve {curve_index}, {where}"
        detail = "" if chord_length is None else f" (chord length {chord_length:.3e})"
        super().__init__(f"degenerate mesh segment at {where}{detail}")


class CgDidNotConvergeError(TriodflowError):
    """Conjugate gradients exhausted its iteration budget."""

    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"CG did not reach tolerance after {iterations} iterations "
            f"(relative residual {residual:.3e})"
        )


class GridMismatchError(TriodflowError):
    """Two discretisations are not nested, so pointwise comparison is undefined."""


class InvalidSequenceError(TriodflowError):
    """A convergence-order computation received unusable input."""


class NonpositiveDiagonalError(TriodflowError):
    """Row equilibration requires strictly positive diagonal entries."""


class ConfigError(TriodflowError):
    """A scenario configuration is missing, inconsistent, or malformed."""
