"""Exception hierarchy shared by every module.

Exit-code mapping used by the CLI: 2 = configuration problem, 3 = bad or
inconsistent input data, 4 = internal fault (non-finite numerics etc.).
"""


class H2VError(Exception):
    exit_code = 1


class ConfigError(H2VError):
    exit_code = 2


class DataError(H2VError):
    exit_code = 3


class SchemaError(DataError):
    """Document does not match the declared JSON schema or its invariants."""


class GeometryError(DataError):
    """Degenerate or out-of-bounds rectangle."""


class DimensionMismatchError(DataError):
    """Frames of one sequence disagree on width/height/channels."""


class EmptyInputError(DataError):
    """An operation that needs at least one element got none."""


class CoverageError(DataError):
    """Per-frame data (plan, trajectory) does not cover every frame index."""


class MetricError(DataError):
    """Metric preconditions violated (empty ground truth, length mismatch)."""


class InternalFault(H2VError):
    """Non-finite value or broken internal invariant; a bug, not bad input."""

    exit_code = 4
