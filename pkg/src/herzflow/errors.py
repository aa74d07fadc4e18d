"""Exception hierarchy shared by all herzflow modules."""

__all__ = ["HerzflowError", "GridError", "FieldValueError", "FieldFormatError", "FilterBankError",
           "ParameterError", "BandLimitError", "DivergenceError", "CFLError", "ContractionError",
           "TrajectoryError", "JacobianError", "ConfigError"]


class HerzflowError(Exception):
    """Base class for every error raised by the package."""


class GridError(HerzflowError, ValueError):
    """Invalid grid construction or mismatched grids."""


class FieldValueError(HerzflowError, ValueError):
    """NaN/Inf values or malformed field arrays."""


class FieldFormatError(HerzflowError, ValueError):
    """Corrupt or unsupported binary field file."""


class FilterBankError(HerzflowError, ValueError):
    """Dyadic index range that the lattice cannot host."""


class ParameterError(HerzflowError, ValueError):
    """Norm indices outside the regime an operation requires."""


class BandLimitError(HerzflowError, ValueError):
    """Input is not frequency-localized where an operation needs it to be."""


class DivergenceError(HerzflowError, ValueError):
    """A velocity field that must be solenoidal is not."""


class CFLError(HerzflowError, ValueError):
    """Time step exceeds the stability bound."""


class ContractionError(HerzflowError, RuntimeError):
    """The pressure fixed point stopped contracting or hit its iteration cap."""


class TrajectoryError(HerzflowError, RuntimeError):
    """Non-finite particle positions during flow integration."""


class JacobianError(HerzflowError, ValueError):
    """A map that should preserve volume does not."""


class ConfigError(HerzflowError, ValueError):
    """Unparseable or inconsistent experiment configuration."""
