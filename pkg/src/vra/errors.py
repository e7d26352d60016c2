"""Exception types shared across the pipeline.

Data problems (bad files, unknown ids, short videos) derive from
:class:`DataError`; arithmetic problems (undefined statistics, degenerate
correlations, non-finite gradients) derive from :class:`NumericError`.
The CLI maps the two families to distinct exit codes.
"""


class VRAError(Exception):
    """Base class for every error raised by this package."""


class DataError(VRAError):
    pass


class NumericError(VRAError):
    pass


class ManifestError(DataError):
    pass


class DuplicateIdError(ManifestError):
    pass


class MissingFileError(DataError):
    pass


class DimensionMismatchError(DataError):
    pass


class NonFiniteError(DataError):
    pass


class UnknownVideoError(DataError, KeyError):
    def __str__(self):
        # KeyError.__str__ would repr() the message
        return str(self.args[0]) if self.args else ""


class CorruptFileError(DataError):
    pass


class VersionError(CorruptFileError):
    pass


class ChecksumError(CorruptFileError):
    pass


class TooFewFrames(DataError):
    def __init__(self, video_id, n_frames, length):
        self.video_id = video_id
        self.n_frames = n_frames
        self.length = length
        super().__init__(
            f"video {video_id!r} has {n_frames} frames, fewer than the "
            f"sequence length {length}"
        )


class UndefinedStd(NumericError):
    pass


class DegenerateInput(NumericError):
    pass


class NonFiniteGradient(NumericError):
    pass
