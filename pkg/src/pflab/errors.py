"""Exception types shared across the package."""


class PflabError(Exception):
    """Base class for all errors raised by pflab."""


class ConfigError(PflabError):
    """Malformed or inconsistent configuration (schema violations, bad field values)."""


class DimensionCapError(PflabError):
    """Requested basis would exceed the hard dimension cap."""


class BasisMismatchError(PflabError):
    """Operators or vectors built on different bases were combined."""


class NonHermitianError(PflabError):
    """An operator expected to be Hermitian is not."""


class NotAxialError(PflabError):
    """Operation requires a mode set whose k-points all lie on one axis."""


class DomainError(PflabError):
    """Evaluation outside the domain of an interpolant or search grid."""


class GapTooSmallError(PflabError):
    """A resolvent-style denominator fell below its configured floor."""


class SolverError(PflabError):
    """Eigensolver failed to converge.

    Carries the best residual norms seen so far in ``residuals``.
    """

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class IndeterminateDegeneracy(PflabError):
    """Ground-cluster detection could not certify a separation gap.

    Distinct from any degeneracy count: the clustering was ambiguous at the
    requested tolerances.  Carries the eigenvalues that were examined.
    """

    def __init__(self, message, eigenvalues=None):
        super().__init__(message)
        self.eigenvalues = eigenvalues


class ScientificFailure(PflabError):
    """A checked hypothesis held but the predicted conclusion failed."""
