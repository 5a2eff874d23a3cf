"""Exception types shared across the package."""


class AnchorGladError(Exception):
    """Base class for all package-specific errors."""


class DatasetError(AnchorGladError):
    """A dataset directory is unusable (missing or unreadable files)."""


class MalformedDatasetError(DatasetError):
    """A dataset file exists but its contents violate the format."""


class PartitionError(AnchorGladError):
    """The normal/abnormal split of a graph set is empty on one side."""


class StratificationError(AnchorGladError):
    """A class is too small to spread over the requested fold count."""


class DimensionError(AnchorGladError):
    """Tensor or feature shapes are incompatible."""


class NonFiniteError(AnchorGladError):
    """A NaN or infinity appeared where finite values are required."""


class TrainingDivergedError(AnchorGladError):
    """Training produced a non-finite loss or gradient.

    Carries the last parameter state that was still finite so callers can
    persist a checkpoint.
    """

    def __init__(self, message, checkpoint=None, epoch=None):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.epoch = epoch


class UndefinedAUCError(AnchorGladError):
    """AUC requested for scores containing only one class."""


class ModelFileError(AnchorGladError):
    """A persisted model file is corrupt or does not match its data."""


class ConfigError(AnchorGladError):
    """A run configuration contains unknown keys or bad values."""
