"""Exception hierarchy shared by all modules."""


class SpectralError(Exception):
    """Base class for all package errors."""


class DomainError(SpectralError, ValueError):
    """Arguments lie outside the domain of the requested operation."""


class ValidationError(SpectralError, ValueError):
    """Input data violates a structural condition (ordering, positivity, schema)."""


class SingularityError(SpectralError, ArithmeticError):
    """A solution crosses zero or a denominator degenerates where it must not."""


class IntegrationError(SpectralError, RuntimeError):
    """ODE propagation produced non-finite values.

    Attributes
    ----------
    last_good_x : float or None
        Rightmost (or leftmost, for backward runs) abscissa with finite values.
    """

    def __init__(self, message, last_good_x=None):
        super().__init__(message)
        self.last_good_x = last_good_x


class SearchError(SpectralError, RuntimeError):
    """Root bracketing failed; carries the scan diagnostics.

    Attributes
    ----------
    scan : dict or None
        Grid and function values examined before giving up.
    """

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan


class ResolutionError(SpectralError, RuntimeError):
    """Grid too coarse to separate features (eigenfunction zeros closer than two steps)."""


class ConditioningError(SpectralError, RuntimeError):
    """A linear system is too ill-conditioned to trust (Hankel condition number cap)."""


class ReconstructionError(SpectralError, RuntimeError):
    """An inverse fit did not converge; carries the residual report.

    Attributes
    ----------
    report : dict or None
        Per-index residuals of the best iterate.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
