"""Exception taxonomy shared across the codec."""


class VoxelCodecError(Exception):
    """Base class for every error raised by this package."""


class PlyParseError(VoxelCodecError):
    """Malformed PLY content; carries the offending header line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnsupportedFormatError(VoxelCodecError):
    """Recognizable but unsupported input (e.g. big-endian PLY, bad magic)."""


class ParameterError(VoxelCodecError):
    """Argument outside its documented domain."""


class ShapeError(VoxelCodecError):
    """Array argument with the wrong shape or dtype."""


class EmptyCloudError(VoxelCodecError):
    """Operation undefined on an empty point cloud."""


class UnsupportedDepthError(VoxelCodecError):
    """Grid depth outside the range the operation supports."""


class ConfigError(VoxelCodecError):
    """Invalid or contradictory codec configuration."""


class StateError(VoxelCodecError):
    """Object used after a terminal operation (e.g. coder re-flush)."""


class MissingModelError(VoxelCodecError):
    """No weights available for a block size the coder needs."""


class CorruptStreamError(VoxelCodecError):
    """Bitstream violates the container or coding invariants."""


class IncompatibleWeightsError(VoxelCodecError):
    """Weight file does not match the expected format or architecture."""
