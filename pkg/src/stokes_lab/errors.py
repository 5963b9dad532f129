"""Exception hierarchy for stokes_lab."""


class StokesLabError(Exception):
    """Base class for all stokes_lab errors."""


class TruncationError(StokesLabError):
    """Raised when a requested truncation leaves too much probability mass behind."""


class NonPhysicalStateError(StokesLabError):
    """Raised when a constructed state fails a physicality check (norm, trace, PSD)."""


class TensorConsistencyError(StokesLabError):
    """Raised when tensor data violates an exact algebraic identity beyond tolerance.

    Signals broken input data (e.g. a non-Hermitian tensor or residual
    imaginary parts in moment components), not a numerical tolerance issue.
    """


class RankDeficientError(StokesLabError):
    """Raised when a tomography design matrix cannot resolve all unknowns.

    Attributes:
        rank: numerical rank actually achieved.
        expected: number of independent unknowns.
        condition_number: ratio of extreme singular values.
        deficient_directions: rows of the unresolved subspace, expressed in
            moment-component coordinates (one row per missing rank).
    """

    def __init__(self, message, rank, expected, condition_number, deficient_directions):
        super().__init__(message)
        self.rank = rank
        self.expected = expected
        self.condition_number = condition_number
        self.deficient_directions = deficient_directions
