"""Exception hierarchy shared across the simulator.

The CLI maps these onto exit codes: configuration problems -> 1, output I/O
failures -> 2, numerical aborts -> 3.
"""


class WnvError(Exception):
    """Base class for all simulator errors."""


class DimensionError(WnvError, ValueError):
    """Operands have incompatible shapes (contract violation)."""


class SingularMatrixError(WnvError):
    """A matrix required to be positive-definite is not (pivot below floor)."""


class EighConvergenceError(WnvError):
    """Jacobi eigendecomposition did not converge within the sweep cap."""


class DegenerateChannelError(WnvError):
    """A channel block is rank-deficient, so zero-forcing is impossible."""


class ConfigError(WnvError):
    """Base class for configuration problems."""


class PlacementError(ConfigError):
    """User placement failed after the rejection-sampling cap."""


class InvariantError(WnvError):
    """An internal invariant was violated; the run aborts with diagnostics."""


class ZeroDemandError(WnvError):
    """A slot produced zero virtualization demand; normalized loss undefined."""


class ConfigFileError(ConfigError):
    """Config file missing or unreadable."""


class ConfigParseError(ConfigError):
    """Config file syntactically invalid."""


class ConfigValidationError(ConfigError):
    """Config parsed but violates an invariant (or has unknown keys)."""


class OutputError(WnvError):
    """Writing result files failed."""
