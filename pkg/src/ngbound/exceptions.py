"""Exception hierarchy shared by all modules."""


class NGBoundError(Exception):
    """Base class for every error raised by ngbound."""


class InvalidInputError(NGBoundError, ValueError):
    """Arguments outside the documented domain (bad weights, singular covariance, ...)."""


class InvalidStateError(InvalidInputError):
    """A density matrix or state file that cannot be interpreted as a quantum state."""


class CutoffTooSmallError(NGBoundError):
    """The Fock cutoff discards more population than the configured tail tolerance."""


class UnsupportedRangeError(NGBoundError):
    """Evaluation requested outside the numerically validated range."""


class GridUnderresolvedError(NGBoundError):
    """Quadrature grid too coarse or too narrow for the requested accuracy."""


class DegenerateParametersError(NGBoundError):
    """The Region-I linear system is (numerically) singular."""


class InfeasibleRegionError(NGBoundError):
    """Parameters do not describe a valid density matrix (e.g. wrong n_min)."""


class InconsistencyError(NGBoundError):
    """An internal consistency check failed; indicates a formula bug."""
