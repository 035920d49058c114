"""3D binary morphology and geometry primitives: dilate/erode/open/close,
connected components, hole filling, surface extraction, Euclidean distance transform.

Out-of-bounds neighbors are background everywhere. All operations are pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyMask
from .volume import Mask3D

FACE6 = ndimage.generate_binary_structure(3, 1)
FULL26 = np.ones((3, 3, 3), dtype=bool)


class MorphOp(enum.Enum):
    DILATE = "dilate"
    ERODE = "erode"
    OPEN = "open"
    CLOSE = "close"


class Connectivity(enum.Enum):
    FACE6 = "face6"
    FULL26 = "full26"

    @property
    def structure(self) -> np.ndarray:
        return FACE6 if self is Connectivity.FACE6 else FULL26


@dataclass(frozen=True)
class StructuringElement:
    """A symmetric neighborhood of integer voxel offsets containing the origin."""

    offsets: np.ndarray
    shape: str

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "offsets", offsets)
        rows = {tuple(o) for o in offsets}
        if (0, 0, 0) not in rows:
            raise ValueError("structuring element must contain the origin")
        if any((-a, -b, -c) not in rows for a, b, c in rows):
            raise ValueError("structuring element must be symmetric under negation")

    @classmethod
    def ball(cls, radius_vox: float) -> "StructuringElement":
        """Euclidean ball of the given radius in voxel units (Ball(1) = 6-neighborhood)."""
        r = int(math.floor(radius_vox))
        grid = np.mgrid[-r : r + 1, -r : r + 1, -r : r + 1].reshape(3, -1).T
        keep = (grid.astype(float) ** 2).sum(axis=1) <= radius_vox**2
        return cls(grid[keep], "ball")

    @classmethod
    def box(cls, half_extent: int) -> "StructuringElement":
        """Chebyshev box: all offsets with max-norm <= half_extent."""
        h = int(half_extent)
        grid = np.mgrid[-h : h + 1, -h : h + 1, -h : h + 1].reshape(3, -1).T
        return cls(grid, "box")

    @classmethod
    def ball_mm(cls, radius_mm: float, spacing: tuple[float, float, float]) -> "StructuringElement":
        """Ball of a physical radius, converted per axis: an ellipsoid in voxel units."""
        half = [int(math.floor(radius_mm / s)) for s in spacing]
        gx, gy, gz = np.mgrid[
            -half[0] : half[0] + 1, -half[1] : half[1] + 1, -half[2] : half[2] + 1
        ]
        d2 = (gx * spacing[0]) ** 2 + (gy * spacing[1]) ** 2 + (gz * spacing[2]) ** 2
        keep = d2 <= radius_mm**2
        offsets = np.stack([gx[keep], gy[keep], gz[keep]], axis=1)
        return cls(offsets, "ball")

    def footprint(self) -> np.ndarray:
        """Dense boolean array centered on the origin, for ndimage structure args."""
        half = np.abs(self.offsets).max(axis=0)
        fp = np.zeros(2 * half + 1, dtype=bool)
        idx = self.offsets + half
        fp[idx[:, 0], idx[:, 1], idx[:, 2]] = True
        return fp


@dataclass(frozen=True)
class LabeledComponents:
    """Connected-component labeling: 0 is background, labels 1..count in scan order."""

    labels: np.ndarray
    count: int
    sizes: list[int]

    def size_of(self, label: int) -> int:
        return self.sizes[label - 1]


def binary_morph(mask: Mask3D, op: MorphOp, se: StructuringElement) -> Mask3D:
    """Dilate/erode/open/close with the given element; borders count as background."""
    fp = se.footprint()

    def dilate(a):
        return ndimage.binary_dilation(a, structure=fp, border_value=0)

    def erode(a):
        return ndimage.binary_erosion(a, structure=fp, border_value=0)

    a = mask.data
    if op is MorphOp.DILATE:
        out = dilate(a)
    elif op is MorphOp.ERODE:
        out = erode(a)
    elif op is MorphOp.OPEN:
        out = dilate(erode(a))
    elif op is MorphOp.CLOSE:
        out = erode(dilate(a))
    else:
        raise ValueError(f"unknown morphology op {op!r}")
    return Mask3D.like(mask, out)


def dilate(mask: Mask3D, se: StructuringElement) -> Mask3D:
    return binary_morph(mask, MorphOp.DILATE, se)


def erode(mask: Mask3D, se: StructuringElement) -> Mask3D:
    return binary_morph(mask, MorphOp.ERODE, se)


def connected_components(
    mask: Mask3D, connectivity: Connectivity = Connectivity.FULL26
) -> LabeledComponents:
    """Label maximal connected sets; labels are ordered by first encounter in C scan order."""
    raw, n = ndimage.label(mask.data, structure=connectivity.structure)
    if n == 0:
        return LabeledComponents(raw.astype(np.int32), 0, [])
    flat = raw.ravel(order="C")
    nz = flat[flat > 0]
    first_label, first_pos = np.unique(nz, return_index=True)
    order = np.argsort(first_pos, kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[first_label[order]] = np.arange(1, n + 1, dtype=np.int32)
    labels = remap[raw]
    sizes = np.bincount(labels.ravel(), minlength=n + 1)[1:]
    return LabeledComponents(labels, int(n), [int(s) for s in sizes])


def fill_holes(mask: Mask3D) -> Mask3D:
    """Turn background cavities (Face6 components unreachable from the border) into foreground."""
    bg = ~mask.data
    labels, n = ndimage.label(bg, structure=FACE6)
    if n == 0:
        return mask
    border = np.zeros(n + 1, dtype=bool)
    for axis in range(3):
        for face in (0, -1):
            sl = [slice(None)] * 3
            sl[axis] = face
            border[np.unique(labels[tuple(sl)])] = True
    border[0] = True
    filled = mask.data | ~border[labels]
    return Mask3D.like(mask, filled)


def extract_surface(mask: Mask3D) -> Mask3D:
    """Foreground voxels with at least one Face6 background (or out-of-bounds) neighbor."""
    interior = ndimage.binary_erosion(mask.data, structure=FACE6, border_value=0)
    return Mask3D.like(mask, mask.data & ~interior)


def distance_transform(
    mask: Mask3D, spacing: tuple[float, float, float] | None = None
) -> np.ndarray:
    """Exact Euclidean distance (mm) from every voxel center to the nearest foreground
    voxel center; zero on foreground. Raises EmptyMask on an empty mask."""
    if mask.is_empty:
        raise EmptyMask("distance transform of an empty mask is undefined")
    if spacing is None:
        spacing = mask.spacing
    return ndimage.distance_transform_edt(~mask.data, sampling=spacing)
