"""Exception types shared across the package.

The CLI maps these onto process exit codes, so raising the right class
matters: FormatError means "your input file is malformed", everything
else derived from ToolkitError means "the numbers or the call contract
are wrong".
"""


class ToolkitError(Exception):
    """Base class for every error this package raises deliberately."""


class FormatError(ToolkitError):
    """Malformed input file: bad structure, bad line, undecodable bytes."""


class DimensionError(ToolkitError):
    """Tensor or table shapes incompatible with the requested operation."""


class ConfigurationError(ToolkitError):
    """Invalid configuration value or combination of values."""


class ContractError(ToolkitError):
    """The caller violated an operation's calling contract."""


class EmptySequenceError(ToolkitError):
    """An operation that needs at least one unmasked element got none."""


class MissingFeatureError(ToolkitError):
    """An image name has no row in the feature table."""
