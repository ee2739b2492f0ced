"""Exception types shared across the package."""


class HaarlabError(Exception):
    """Base class for all package-specific errors."""


class SpecError(HaarlabError, ValueError):
    """Invalid specification of an ensemble, measure, polynomial or config."""


class FlagError(HaarlabError, ValueError):
    """A structural matrix flag is required but absent (or violated)."""


class DegenerateSpectrumError(HaarlabError, ArithmeticError):
    """Eigenvalue gaps below tolerance where a coupling needs distinct spectra."""


class FixedPointError(HaarlabError, ArithmeticError):
    """Subordination fixed point failed to converge at some grid node."""

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = nodes if nodes is not None else []


class NoAnalyticOracleError(HaarlabError, LookupError):
    """The requested polynomial has no supported closed-form norm oracle."""
