"""Exception hierarchy shared across the package.

The CLI maps these onto its exit codes: ParameterError -> 2,
BlowUpError -> 3, ConstraintError -> 4, I/O failures -> 5.
"""


class HseulerError(Exception):
    """Base class for package errors."""


class InvalidGridError(HseulerError):
    """Grid dimensions unusable (odd, too small, or mismatched)."""


class GridMismatchError(HseulerError):
    """Operands live on different grids."""


class ParameterError(HseulerError, ValueError):
    """An argument is outside its admissible range."""


class ScaleError(ParameterError):
    """Mollification scale outside [2h, 1/4]."""


class ConstraintError(HseulerError):
    """A field violates the hydrostatic compatibility or symmetry structure."""


class CalibrationError(HseulerError):
    """Synthetic field missed its target regularity after the retune budget."""


class BlowUpError(HseulerError):
    """Solver produced non-finite values.

    Carries the blow-up time and whatever trajectory prefix was completed.
    """

    def __init__(self, message, time=None, trajectory=None):
        super().__init__(message)
        self.time = time
        self.trajectory = trajectory


class InsufficientDataError(HseulerError):
    """Not enough snapshots/scales for the requested analysis."""


class IncompleteInputError(HseulerError):
    """A criterion was requested but its measured inputs are missing.

    ``missing`` lists the RegularityReport fields that would be needed.
    """

    def __init__(self, criterion, missing):
        super().__init__(f"{criterion}: missing measurements {sorted(missing)}")
        self.criterion = criterion
        self.missing = tuple(missing)
