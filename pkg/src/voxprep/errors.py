"""Exception types raised by voxprep operations."""


class VoxprepError(Exception):
    """Base class for all voxprep errors."""


# --- NIfTI I/O ---------------------------------------------------------------

class TruncatedHeader(VoxprepError):
    """Fewer than 348 bytes available for a NIfTI-1 header."""


class BadMagic(VoxprepError):
    """The byte stream is not a NIfTI-1 header."""


class Nifti2Unsupported(VoxprepError):
    """The file is NIfTI-2, which this toolkit does not read."""


class UnsupportedDatatype(VoxprepError):
    """Datatype code outside the supported set {uint8, int16, int32, float32, float64}."""


class InconsistentBitpix(VoxprepError):
    """bitpix does not match the header's datatype code."""


class UnsupportedDimensionality(VoxprepError):
    """Volume is not 3D (or 4D with a singleton 4th dimension)."""


class InvalidHeader(VoxprepError):
    """A header field violates a NIfTI-1 invariant (e.g. nonpositive pixdim)."""


class NonFiniteData(VoxprepError):
    """Voxel data contains NaN or infinity after scaling."""


class ExtentMismatch(VoxprepError):
    """Volume extents differ from the header template's dim fields."""


class IoError(VoxprepError):
    """Filesystem-level failure while reading or writing a volume."""


# --- volume core -------------------------------------------------------------

class DegenerateVolume(VoxprepError):
    """Operation needs intensity variation but the volume is constant."""


class IndexOutOfBounds(VoxprepError, IndexError):
    """Voxel index outside the volume extents."""


class GridMismatch(VoxprepError):
    """Two volumes/masks do not share the same voxel grid."""


# --- morphology --------------------------------------------------------------

class EmptyMask(VoxprepError):
    """Operation requires a nonempty mask."""


# --- foreground segmentation -------------------------------------------------

class EmptyForeground(VoxprepError):
    """No foreground component survived segmentation."""


# --- anonymization -----------------------------------------------------------

class EmptyHeadMask(VoxprepError):
    """Head mask contains no voxels."""


class AmbiguousOrientation(VoxprepError):
    """Affine axes too oblique to identify anterior/superior directions."""


# --- metrics -----------------------------------------------------------------

class EmptyInput(VoxprepError):
    """Aggregate requested over an empty case list."""


class AllUndefined(VoxprepError):
    """Every case has an undefined value for the requested metric."""


# --- sampling ----------------------------------------------------------------

class SamplingExhausted(VoxprepError):
    """Rejection sampling hit the attempt limit for one patch."""
