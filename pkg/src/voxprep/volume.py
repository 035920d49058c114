"""Core volume types and arithmetic: grids, normalization, coordinate transforms, stats."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVolume, GridMismatch, IndexOutOfBounds

HISTOGRAM_BINS = 256


class Modality(enum.Enum):
    CT = "ct"
    MR = "mr"
    UNKNOWN = "unknown"

    @classmethod
    def from_string(cls, s: str | None) -> "Modality":
        if s is None:
            return cls.UNKNOWN
        s = s.strip().lower()
        for m in cls:
            if m.value == s:
                return m
        raise ValueError(f"unknown modality {s!r} (expected ct, mr, or unknown)")


def _check_grid(shape, spacing, affine) -> tuple[tuple, np.ndarray]:
    if len(shape) != 3:
        raise ValueError(f"expected 3D data, got shape {shape}")
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise ValueError(f"spacing must be 3 positive reals, got {spacing}")
    affine = np.asarray(affine, dtype=np.float64)
    if affine.shape != (4, 4):
        raise ValueError(f"affine must be 4x4, got shape {affine.shape}")
    if not np.array_equal(affine[3], [0.0, 0.0, 0.0, 1.0]):
        raise ValueError("affine last row must be (0,0,0,1)")
    return spacing, affine


@dataclass(frozen=True, eq=False)
class Volume3D:
    """A scalar 3D grid with voxel spacing (mm), a voxel-to-world affine, and a modality tag.

    Data is always float64; values must be finite. Immutable after construction
    and safe to share across threads.
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    affine: np.ndarray
    modality: Modality = Modality.UNKNOWN

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        spacing, affine = _check_grid(data.shape, self.spacing, self.affine)
        if not np.isfinite(data).all():
            raise ValueError("volume data contains NaN or infinite values")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", affine)

    @property
    def extents(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray) -> "Volume3D":
        """Same grid and modality, new voxel values."""
        return Volume3D(data, self.spacing, self.affine, self.modality)

    def same_grid(self, other) -> bool:
        return (
            self.extents == other.extents
            and self.spacing == other.spacing
            and np.allclose(self.affine, other.affine)
        )


@dataclass(frozen=True, eq=False)
class Mask3D:
    """A binary volume on a Volume3D grid (foreground, anonymization, padding, loss masks)."""

    data: np.ndarray
    spacing: tuple[float, float, float]
    affine: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.dtype != np.bool_:
            data = data.astype(bool)
        spacing, affine = _check_grid(data.shape, self.spacing, self.affine)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "affine", affine)

    @classmethod
    def like(cls, grid: "Volume3D | Mask3D", data: np.ndarray) -> "Mask3D":
        """New mask on an existing grid."""
        return cls(data, grid.spacing, grid.affine)

    @classmethod
    def empty_like(cls, grid: "Volume3D | Mask3D") -> "Mask3D":
        return cls.like(grid, np.zeros(grid.extents, dtype=bool))

    @property
    def extents(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def count(self) -> int:
        return int(self.data.sum())

    @property
    def is_empty(self) -> bool:
        return not self.data.any()

    def same_grid(self, other) -> bool:
        return (
            self.extents == other.extents
            and self.spacing == other.spacing
            and np.allclose(self.affine, other.affine)
        )

    def require_same_grid(self, other, what: str = "mask") -> None:
        if not self.same_grid(other):
            raise GridMismatch(
                f"{what} grids differ: extents {self.extents} vs {other.extents}, "
                f"spacing {self.spacing} vs {other.spacing}"
            )


@dataclass(frozen=True)
class VolumeStats:
    """Descriptive statistics of a volume, with a 256-bin histogram over [min, max]."""

    min: float
    max: float
    mean: float
    std: float
    nonzero_fraction: float
    histogram: np.ndarray

    def as_dict(self, include_histogram: bool = True) -> dict:
        d = {
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "std": self.std,
            "nonzero_fraction": self.nonzero_fraction,
        }
        if include_histogram:
            d["histogram"] = [int(c) for c in self.histogram]
        return d


def zscore_normalize(vol: Volume3D) -> Volume3D:
    """Shift/scale intensities to zero mean and unit (population) standard deviation.

    Statistics are computed over all voxels; geometry is unchanged. Raises
    DegenerateVolume on a constant volume.
    """
    mean = float(vol.data.mean())
    std = float(vol.data.std())
    if std == 0.0:
        raise DegenerateVolume("cannot z-score normalize a constant volume")
    return vol.with_data((vol.data - mean) / std)


def voxel_to_world(vol: Volume3D, index: tuple[int, int, int]) -> tuple[float, float, float]:
    """Map a voxel index to world coordinates (mm) via the affine."""
    i, j, k = index
    nx, ny, nz = vol.extents
    if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
        raise IndexOutOfBounds(f"index {index} outside extents {vol.extents}")
    x = vol.affine @ np.array([i, j, k, 1.0])
    return (float(x[0]), float(x[1]), float(x[2]))


def volume_stats(vol: Volume3D) -> VolumeStats:
    """Min/max/mean/std, nonzero fraction, and a 256-bin histogram."""
    data = vol.data
    vmin = float(data.min())
    vmax = float(data.max())
    if vmin == vmax:
        hist = np.zeros(HISTOGRAM_BINS, dtype=np.int64)
        hist[0] = data.size
    else:
        hist, _ = np.histogram(data, bins=HISTOGRAM_BINS, range=(vmin, vmax))
        hist = hist.astype(np.int64)
    return VolumeStats(
        min=vmin,
        max=vmax,
        mean=float(data.mean()),
        std=float(data.std()),
        nonzero_fraction=float(np.count_nonzero(data) / data.size),
        histogram=hist,
    )
