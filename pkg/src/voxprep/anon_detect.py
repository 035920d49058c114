"""Heuristic detection of anonymized regions: exact-zero carve-outs (deface) and
low-gradient blurred replacements (reface / reface plus).

The detector is classical: no learned weights, tuned on the phantom suite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import morphology
from .errors import EmptyHeadMask
from .foreground import ForegroundParams, segment_foreground
from .morphology import Connectivity, MorphOp, StructuringElement, connected_components
from .volume import Mask3D, Volume3D

# reference statistic for "normal" texture: high quantile of head gradient energy,
# robust even when most of the head surface has been blurred (reface plus)
ENERGY_REFERENCE_QUANTILE = 0.90


class DetectionMode(enum.Enum):
    NONE = "none"
    DEFACE_LIKE = "deface-like"
    BLUR_LIKE = "blur-like"
    MIXED = "mixed"


@dataclass(frozen=True)
class DetectionParams:
    zero_tolerance: float = 0.0
    min_zero_region_vox: int = 100
    blur_window_vox: int = 5
    blur_ratio_threshold: float = 0.35

    def __post_init__(self):
        if self.zero_tolerance < 0:
            raise ValueError("zero_tolerance must be >= 0")
        if self.min_zero_region_vox < 1:
            raise ValueError("min_zero_region_vox must be >= 1")
        if self.blur_window_vox < 3 or self.blur_window_vox % 2 == 0:
            raise ValueError("blur_window_vox must be odd and >= 3")
        if not (0 < self.blur_ratio_threshold < 1):
            raise ValueError("blur_ratio_threshold must be in (0, 1)")


@dataclass(frozen=True)
class DetectionResult:
    anon_mask: Mask3D
    mode_guess: DetectionMode
    confidence: float


def detect_zero_regions(
    vol: Volume3D, head_mask: Mask3D, params: DetectionParams | None = None
) -> Mask3D:
    """Zero-valued regions that replace anatomy rather than being background air.

    Zeros outside the head that reach the volume border are background air and
    are discarded; remaining Face6 zero components are kept when they intersect
    a 2-voxel dilation of the head and meet the minimum size.
    """
    if params is None:
        params = DetectionParams()
    if head_mask.is_empty:
        raise EmptyHeadMask("zero-region detection needs a nonempty head mask")
    head_mask.require_same_grid(vol, "head mask")

    zeros = np.abs(vol.data) <= params.zero_tolerance
    if not zeros.any():
        return Mask3D.empty_like(vol)

    border_air = _border_connected(zeros & ~head_mask.data)
    candidate = zeros & ~border_air
    if not candidate.any():
        return Mask3D.empty_like(vol)

    near_head = morphology.dilate(head_mask, StructuringElement.ball(2)).data
    comps = connected_components(Mask3D.like(vol, candidate), Connectivity.FACE6)
    keep = np.zeros(comps.count + 1, dtype=bool)
    for label in range(1, comps.count + 1):
        if comps.size_of(label) < params.min_zero_region_vox:
            continue
        comp = comps.labels == label
        if (comp & near_head).any():
            keep[label] = True
    return Mask3D.like(vol, keep[comps.labels])


def _border_connected(mask: np.ndarray) -> np.ndarray:
    """Subset of a boolean array Face6-connected to the volume border."""
    labels, n = ndimage.label(mask, structure=morphology.FACE6)
    if n == 0:
        return np.zeros_like(mask)
    border = np.zeros(n + 1, dtype=bool)
    for axis in range(3):
        for face in (0, -1):
            sl = [slice(None)] * 3
            sl[axis] = face
            border[np.unique(labels[tuple(sl)])] = True
    border[0] = False
    return border[labels]


def blur_energy_map(vol: Volume3D, window_vox: int) -> np.ndarray:
    """Per-voxel mean squared face-neighbor finite difference (mm-scaled),
    box-averaged over a window with boundary renormalization."""
    if window_vox < 3 or window_vox % 2 == 0:
        raise ValueError("window_vox must be odd and >= 3")
    data = vol.data
    acc = np.zeros_like(data)
    cnt = np.zeros_like(data)
    for axis in range(3):
        lo = [slice(None)] * 3
        hi = [slice(None)] * 3
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        diff = (data[tuple(hi)] - data[tuple(lo)]) / vol.spacing[axis]
        sq = diff * diff
        acc[tuple(lo)] += sq
        acc[tuple(hi)] += sq
        cnt[tuple(lo)] += 1
        cnt[tuple(hi)] += 1
    energy = acc / cnt

    w = window_vox
    num = ndimage.uniform_filter(energy, size=w, mode="constant", cval=0.0)
    den = ndimage.uniform_filter(np.ones_like(energy), size=w, mode="constant", cval=0.0)
    return num / den


def detect_anonymization(
    vol: Volume3D,
    params: DetectionParams | None = None,
    head_mask: Mask3D | None = None,
) -> DetectionResult:
    """Full detector: head segmentation, zero-region path, blur-energy path.

    Blurred regions are head voxels whose windowed gradient energy falls below
    blur_ratio_threshold times a high quantile of head energy; the detection is
    closed, dilated by the window half-width (the windowed estimator under-covers
    region edges by that much), size-filtered, and clipped near the head.
    """
    if params is None:
        params = DetectionParams()
    if head_mask is None:
        head_mask = segment_foreground(vol, ForegroundParams.defaults_for(vol.modality))

    zero_mask = detect_zero_regions(vol, head_mask, params)

    energy = blur_energy_map(vol, params.blur_window_vox)
    head = head_mask.data
    reference = float(np.quantile(energy[head], ENERGY_REFERENCE_QUANTILE))
    low = head & (energy < params.blur_ratio_threshold * reference)

    near_head = morphology.dilate(head_mask, StructuringElement.ball(2)).data
    blur_mask = np.zeros_like(low)
    if low.any():
        closed = morphology.binary_morph(
            Mask3D.like(vol, low), MorphOp.CLOSE, StructuringElement.ball(2)
        )
        grown = morphology.dilate(closed, StructuringElement.ball(params.blur_window_vox // 2))
        clipped = Mask3D.like(vol, grown.data & near_head)
        comps = connected_components(clipped, Connectivity.FACE6)
        keep = np.concatenate(
            [[False], np.asarray(comps.sizes) >= params.min_zero_region_vox]
        ) if comps.count else np.array([False])
        blur_mask = keep[comps.labels] if comps.count else blur_mask

    anon = zero_mask.data | blur_mask
    n_anon = int(anon.sum())
    if n_anon == 0:
        return DetectionResult(Mask3D.empty_like(vol), DetectionMode.NONE, 0.0)

    n_zero = int(zero_mask.data.sum())
    n_blur_only = int((blur_mask & ~zero_mask.data).sum())
    if n_zero >= 0.9 * n_anon:
        mode = DetectionMode.DEFACE_LIKE
    elif n_blur_only >= 0.9 * n_anon:
        mode = DetectionMode.BLUR_LIKE
    else:
        mode = DetectionMode.MIXED

    anon_mask = Mask3D.like(vol, anon)
    confidence = _surface_adjacency(anon_mask, head_mask)
    return DetectionResult(anon_mask, mode, confidence)


def _surface_adjacency(anon_mask: Mask3D, head_mask: Mask3D) -> float:
    """Fraction of the detection surface lying within one voxel of the head surface."""
    surf_anon = morphology.extract_surface(anon_mask).data
    n = int(surf_anon.sum())
    if n == 0:
        return 0.0
    surf_head = morphology.extract_surface(head_mask)
    near = morphology.dilate(surf_head, StructuringElement.box(1)).data
    return float((surf_anon & near).sum() / n)
