"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ShapeError(ValueError):
    """Array dimensions are inconsistent or not powers of two."""


class ResolutionError(ValueError):
    """A requested resolution level exceeds what the grid supports."""


class NumericalError(ArithmeticError):
    """A numerical consistency check failed."""


class IllPosednessError(NumericalError):
    """A kernel Fourier coefficient is too small to divide by."""


class FitError(ValueError):
    """The rate regression is degenerate."""


class GridFormatError(ValueError):
    """A grid file does not follow the FDGRID01 layout."""


class ConfigError(ValueError):
    """A configuration file is malformed or incomplete."""
