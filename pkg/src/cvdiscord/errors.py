"""Exception types raised by the numerical pipeline."""


class TruncationError(ValueError):
    """Fock truncation too small for the requested amplitude or quadrature range."""


class ConvergenceError(RuntimeError):
    """A quadrature rule or optimizer failed to meet its tolerance."""


class NumericalIntegrityError(RuntimeError):
    """A computed quantity violated a physical invariant beyond tolerance."""
