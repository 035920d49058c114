"""Synthetic anonymization of head volumes: zeroed face/ears, blurred face/ears,
and blurred face plus outer skull — returning ground-truth altered-voxel masks.

The blurred replacement uses the subject's own data (no template face ships
with this toolkit); detectors only need a smoothed, low-gradient region.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import morphology
from .errors import AmbiguousOrientation, EmptyHeadMask, GridMismatch
from .morphology import MorphOp, StructuringElement
from .volume import Mask3D, Volume3D

DEFAULT_ANTERIOR_FRACTION = 0.33
DEFAULT_INFERIOR_FRACTION = 0.6
DEFAULT_EAR_RADIUS_MM = 15.0
AXIS_AMBIGUITY_DEG = 10.0


class AnonKind(enum.Enum):
    DEFACE = "deface"
    REFACE = "reface"
    REFACE_PLUS = "reface-plus"


@dataclass(frozen=True)
class AnonScheme:
    """One of the three anonymization flavors plus its blur/shell parameters."""

    kind: AnonKind
    blur_sigma_mm: float = 6.0
    skull_shell_mm: float = 5.0

    def __post_init__(self):
        if self.blur_sigma_mm <= 0:
            raise ValueError("blur_sigma_mm must be > 0")
        if self.skull_shell_mm <= 0:
            raise ValueError("skull_shell_mm must be > 0")


@dataclass(frozen=True)
class AnonResult:
    """Anonymized volume plus the ground-truth mask of altered voxels."""

    volume: Volume3D
    altered_mask: Mask3D
    scheme: AnonScheme


@dataclass(frozen=True)
class Orientation:
    """Voxel axis and direction sign for each anatomical world axis (RAS)."""

    lateral: tuple[int, int]  # (voxel axis, +1 if increasing index moves right)
    anterior: tuple[int, int]
    superior: tuple[int, int]


def orientation_from_affine(affine: np.ndarray) -> Orientation:
    """Identify the lateral/anterior/superior voxel axes from the affine's columns.

    Raises AmbiguousOrientation when a column's two closest world axes are
    within 10 degrees of each other, or when two columns claim the same axis.
    """
    cols = np.asarray(affine, dtype=float)[:3, :3]
    claims = {}
    for j in range(3):
        col = cols[:, j]
        norm = np.linalg.norm(col)
        if norm == 0:
            raise AmbiguousOrientation(f"affine column {j} is zero")
        angles = np.degrees(np.arccos(np.clip(np.abs(col) / norm, 0.0, 1.0)))
        order = np.argsort(angles)
        if angles[order[1]] - angles[order[0]] < AXIS_AMBIGUITY_DEG:
            raise AmbiguousOrientation(
                f"affine column {j} is within {AXIS_AMBIGUITY_DEG} degrees of two world axes"
            )
        world = int(order[0])
        if world in claims:
            raise AmbiguousOrientation(f"two voxel axes both map to world axis {world}")
        claims[world] = (j, 1 if col[world] > 0 else -1)
    return Orientation(lateral=claims[0], anterior=claims[1], superior=claims[2])


def _axis_coords(shape, axis: int, sign: int) -> np.ndarray:
    """Per-voxel coordinate along a voxel axis, flipped so larger = more positive world."""
    n = shape[axis]
    coord = np.arange(n, dtype=float) if sign > 0 else np.arange(n - 1, -1, -1, dtype=float)
    view = [1, 1, 1]
    view[axis] = n
    return coord.reshape(view)


def build_face_region(
    head_mask: Mask3D,
    anterior_fraction: float = DEFAULT_ANTERIOR_FRACTION,
    inferior_fraction: float = DEFAULT_INFERIOR_FRACTION,
    ear_radius_mm: float = DEFAULT_EAR_RADIUS_MM,
) -> Mask3D:
    """Geometric face-and-ears region: the anterior-inferior cap of the head
    bounding box, plus two balls at the lateral extremes at mid-height, all
    clipped to a 2-voxel outward dilation of the head."""
    if head_mask.is_empty:
        raise EmptyHeadMask("cannot build a face region from an empty head mask")
    if not (0 <= anterior_fraction <= 1 and 0 <= inferior_fraction <= 1):
        raise ValueError("anterior_fraction and inferior_fraction must be in [0, 1]")
    if ear_radius_mm < 0:
        raise ValueError("ear_radius_mm must be >= 0")

    orient = orientation_from_affine(head_mask.affine)
    head = head_mask.data
    shape = head.shape
    spacing = head_mask.spacing

    idx = np.nonzero(head)

    def span(axis, sign):
        coords = idx[axis] if sign > 0 else shape[axis] - 1 - idx[axis]
        return int(coords.min()), int(coords.max())

    ant_axis, ant_sign = orient.anterior
    sup_axis, sup_sign = orient.superior
    lat_axis, lat_sign = orient.lateral

    ant_lo, ant_hi = span(ant_axis, ant_sign)
    sup_lo, sup_hi = span(sup_axis, sup_sign)

    ant_coord = _axis_coords(shape, ant_axis, ant_sign)
    sup_coord = _axis_coords(shape, sup_axis, sup_sign)

    ant_extent = max(ant_hi - ant_lo, 1)
    sup_extent = max(sup_hi - sup_lo, 1)
    ant_pos = (ant_coord - ant_lo) / ant_extent  # 1 = most anterior
    sup_pos = (sup_coord - sup_lo) / sup_extent  # 1 = most superior

    cap = head & (ant_pos > 1.0 - anterior_fraction) & (sup_pos <= inferior_fraction)

    region = cap
    if ear_radius_mm > 0:
        region = region | _ear_balls(
            head, spacing, lat_axis, lat_sign, sup_axis, sup_sign, sup_lo, sup_hi, ear_radius_mm
        )

    near_head = morphology.dilate(head_mask, StructuringElement.ball(2))
    return Mask3D.like(head_mask, region & near_head.data)


def _ear_balls(head, spacing, lat_axis, lat_sign, sup_axis, sup_sign, sup_lo, sup_hi, radius_mm):
    """Two mm-radius balls centered on the lateral extremes of the head at mid-height."""
    shape = head.shape
    mid = (sup_lo + sup_hi) / 2.0
    halfband = max(1.0, 0.05 * (sup_hi - sup_lo))
    sup_coord = _axis_coords(shape, sup_axis, sup_sign)
    band = head & (np.abs(sup_coord - mid) <= halfband)
    out = np.zeros(shape, dtype=bool)
    if not band.any():
        return out

    bi, bj, bk = np.nonzero(band)
    coords = np.stack([bi, bj, bk], axis=1).astype(float)
    lat_vals = coords[:, lat_axis] * lat_sign
    grids = np.indices(shape, dtype=float)
    for pick in (lat_vals.argmin(), lat_vals.argmax()):
        extreme = lat_vals[pick]
        at_extreme = coords[lat_vals == extreme]
        center = at_extreme.mean(axis=0)
        d2 = np.zeros(shape)
        for ax in range(3):
            d2 += ((grids[ax] - center[ax]) * spacing[ax]) ** 2
        out |= d2 <= radius_mm**2
    return out


def gaussian_blur(vol: Volume3D, sigma_mm: float) -> Volume3D:
    """Separable Gaussian blur with per-axis sigma sigma_mm/spacing, truncated at
    3 sigma, with the kernel renormalized at boundaries (constants are fixed points)."""
    if sigma_mm <= 0:
        raise ValueError("sigma_mm must be > 0")
    data = vol.data
    for axis in range(3):
        sigma = sigma_mm / vol.spacing[axis]
        radius = int(3.0 * sigma + 0.5)
        if radius < 1:
            continue
        x = np.arange(-radius, radius + 1, dtype=np.float64)
        kernel = np.exp(-0.5 * (x / sigma) ** 2)
        num = ndimage.correlate1d(data, kernel, axis=axis, mode="constant", cval=0.0)
        n = data.shape[axis]
        wsum = np.convolve(np.ones(n), kernel, mode="same") if n >= kernel.size else None
        if wsum is None or wsum.size != n:
            # short axis: compute weight sums directly
            wsum = np.array(
                [kernel[max(0, radius - i) : radius + (n - i)].sum() for i in range(n)]
            )
        view = [1, 1, 1]
        view[axis] = n
        data = num / wsum.reshape(view)
    return vol.with_data(data)


def apply_anonymization(
    vol: Volume3D,
    head_mask: Mask3D,
    scheme: AnonScheme,
    anterior_fraction: float = DEFAULT_ANTERIOR_FRACTION,
    inferior_fraction: float = DEFAULT_INFERIOR_FRACTION,
    ear_radius_mm: float = DEFAULT_EAR_RADIUS_MM,
) -> AnonResult:
    """Anonymize a head volume, returning the result and the exact altered-voxel mask.

    Deface zeroes the face region; reface replaces it with blurred data; reface
    plus additionally blurs the outer skull shell. The volume is bitwise equal
    to the input outside the altered mask.
    """
    if head_mask.is_empty:
        raise EmptyHeadMask("anonymization needs a nonempty head mask")
    if not head_mask.same_grid(vol):
        raise GridMismatch("head mask grid does not match the volume")

    region = build_face_region(head_mask, anterior_fraction, inferior_fraction, ear_radius_mm)
    data = vol.data.copy()
    altered = region.data.copy()

    if scheme.kind is AnonKind.DEFACE:
        data[altered] = 0.0
    else:
        blurred = gaussian_blur(vol, scheme.blur_sigma_mm).data
        data[altered] = blurred[altered]
        if scheme.kind is AnonKind.REFACE_PLUS:
            se = StructuringElement.ball_mm(scheme.skull_shell_mm, vol.spacing)
            eroded = morphology.binary_morph(head_mask, MorphOp.ERODE, se)
            shell = head_mask.data & ~eroded.data
            data[shell] = blurred[shell]
            altered |= shell

    return AnonResult(
        volume=vol.with_data(data),
        altered_mask=Mask3D.like(vol, altered),
        scheme=scheme,
    )
