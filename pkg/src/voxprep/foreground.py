"""Classical anatomical-foreground segmentation: threshold selection, morphology
cleanup, component selection, hole filling, and constant-padding detection.

Reconstruction padding (exactly-constant border-touching regions) is detected
first and can never enter the foreground mask.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import morphology
from .errors import DegenerateVolume, EmptyForeground
from .morphology import Connectivity, MorphOp, StructuringElement, connected_components
from .volume import HISTOGRAM_BINS, Mask3D, Modality, Volume3D

DEFAULT_CT_THRESHOLD_HU = -500.0
PADDING_MIN_FRACTION = 0.01


class ThresholdMode(enum.Enum):
    OTSU = "otsu"
    FIXED_CT = "fixed-ct"
    MANUAL = "manual"


class KeepComponents(enum.Enum):
    LARGEST = "largest"
    ALL_ABOVE_FRACTION = "above-fraction"


@dataclass(frozen=True)
class ForegroundParams:
    """Segmentation pipeline knobs; defaults keep multi-part anatomy (both legs)
    while dropping table/clothing specks."""

    threshold_mode: ThresholdMode = ThresholdMode.OTSU
    threshold_value: float | None = None
    closing_radius_mm: float = 3.0
    min_component_fraction: float = 0.01
    keep_components: KeepComponents = KeepComponents.ALL_ABOVE_FRACTION

    def __post_init__(self):
        if self.closing_radius_mm < 0:
            raise ValueError("closing_radius_mm must be >= 0")
        if not (0 < self.min_component_fraction <= 1):
            raise ValueError("min_component_fraction must be in (0, 1]")
        if self.threshold_mode in (ThresholdMode.FIXED_CT, ThresholdMode.MANUAL):
            if self.threshold_value is None:
                object.__setattr__(
                    self,
                    "threshold_value",
                    DEFAULT_CT_THRESHOLD_HU
                    if self.threshold_mode is ThresholdMode.FIXED_CT
                    else None,
                )
            if self.threshold_value is None:
                raise ValueError("manual threshold mode needs threshold_value")

    @classmethod
    def defaults_for(cls, modality: Modality) -> "ForegroundParams":
        """CT gets a fixed -500 HU air/tissue threshold; MR/Unknown get Otsu."""
        if modality is Modality.CT:
            return cls(
                threshold_mode=ThresholdMode.FIXED_CT,
                threshold_value=DEFAULT_CT_THRESHOLD_HU,
            )
        return cls()


@dataclass(frozen=True)
class PaddingReport:
    """Exactly-constant, border-touching regions likely introduced by reconstruction."""

    padding_mask: Mask3D
    padding_values: list[float]
    padded_fraction: float


def otsu_threshold(vol: Volume3D, exclude: Mask3D | None = None) -> float:
    """Threshold maximizing between-class variance over a 256-bin histogram.

    Ties break toward the lower threshold; the returned value is the upper edge
    of the last bin assigned to the low class, so foreground is `value > t`.
    """
    data = vol.data
    if exclude is not None and not exclude.is_empty:
        exclude.require_same_grid(vol, "exclude mask")
        data = data[~exclude.data]
    if data.size == 0:
        raise DegenerateVolume("no voxels left after exclusion")
    vmin = float(data.min())
    vmax = float(data.max())
    if vmin == vmax:
        raise DegenerateVolume("constant volume has no threshold")

    hist, edges = np.histogram(data, bins=HISTOGRAM_BINS, range=(vmin, vmax))
    w = hist.astype(np.float64)
    total = w.sum()
    centers = (edges[:-1] + edges[1:]) / 2.0
    cum_w = np.cumsum(w)
    cum_m = np.cumsum(w * centers)
    w0 = cum_w[:-1]
    w1 = total - w0
    m_total = cum_m[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = cum_m[:-1] / w0
        mu1 = (m_total - cum_m[:-1]) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between = np.where((w0 > 0) & (w1 > 0), between, 0.0)
    t = int(np.argmax(between))  # argmax takes the first (lowest) maximizer
    return float(edges[t + 1])


def detect_constant_padding(vol: Volume3D) -> PaddingReport:
    """Flag border-touching Face6 components of any exact value covering >= 1% of voxels."""
    data = vol.data
    n = data.size
    values, counts = np.unique(data, return_counts=True)
    candidates = values[counts >= PADDING_MIN_FRACTION * n]

    padding = np.zeros(data.shape, dtype=bool)
    kept_values: list[float] = []
    for v in candidates:
        eq = data == v
        labels, nlab = ndimage.label(eq, structure=morphology.FACE6)
        if nlab == 0:
            continue
        border = np.zeros(nlab + 1, dtype=bool)
        for axis in range(3):
            for face in (0, -1):
                sl = [slice(None)] * 3
                sl[axis] = face
                border[np.unique(labels[tuple(sl)])] = True
        border[0] = False
        hit = border[labels]
        if hit.any():
            padding |= hit
            kept_values.append(float(v))

    return PaddingReport(
        padding_mask=Mask3D.like(vol, padding),
        padding_values=kept_values,
        padded_fraction=float(padding.sum() / n),
    )


def segment_foreground(vol: Volume3D, params: ForegroundParams | None = None) -> Mask3D:
    """Threshold -> close -> select components -> fill holes, with padding excluded throughout.

    Raises DegenerateVolume on constant input and EmptyForeground when nothing
    survives component selection.
    """
    if params is None:
        params = ForegroundParams.defaults_for(vol.modality)

    report = detect_constant_padding(vol)
    padding = report.padding_mask.data

    if params.threshold_mode is ThresholdMode.OTSU:
        thr = otsu_threshold(vol, exclude=report.padding_mask)
    else:
        thr = float(params.threshold_value)

    candidate = (vol.data > thr) & ~padding
    if not candidate.any():
        raise EmptyForeground(f"no voxels above threshold {thr:g}")

    mask = Mask3D.like(vol, candidate)
    if params.closing_radius_mm > 0:
        se = StructuringElement.ball_mm(params.closing_radius_mm, vol.spacing)
        mask = morphology.binary_morph(mask, MorphOp.CLOSE, se)

    comps = connected_components(mask, Connectivity.FULL26)
    if comps.count == 0:
        raise EmptyForeground("no connected component after closing")
    sizes = np.asarray(comps.sizes)
    if params.keep_components is KeepComponents.LARGEST:
        keep = np.zeros(comps.count + 1, dtype=bool)
        keep[int(sizes.argmax()) + 1] = True
    else:
        total = sizes.sum()
        keep = np.concatenate([[False], sizes >= params.min_component_fraction * total])
    if not keep.any():
        raise EmptyForeground("no component above the size fraction")
    selected = Mask3D.like(vol, keep[comps.labels])

    filled = morphology.fill_holes(selected)
    return Mask3D.like(vol, filled.data & ~padding)
