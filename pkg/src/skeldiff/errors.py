"""Exception types shared across the package.

Every error raised on purpose derives from SkeldiffError so callers (and the
CLI) can map failure classes to distinct exit codes.
"""


class SkeldiffError(Exception):
    """Base class for all skeldiff errors."""


class ShapeError(SkeldiffError, ValueError):
    """Tensor/array shapes do not satisfy an operation's contract."""


class NonFiniteError(SkeldiffError, FloatingPointError):
    """A NaN or infinity showed up where only finite values are allowed."""


class DataFormatError(SkeldiffError, ValueError):
    """A file on disk does not match the expected schema."""


class SkeletonMismatchError(SkeldiffError, ValueError):
    """Joint count of the data does not match the skeleton/model."""


class CheckpointError(SkeldiffError, ValueError):
    """Checkpoint manifest/payload is inconsistent or of the wrong version."""


class MaskError(SkeldiffError, ValueError):
    """Invalid masking parameters or an empty/degenerate mask."""
