"""Segmentation evaluation: Dice Similarity Coefficient and HD95 in mm, with
mean/std/median aggregation and Tukey boxplot summaries.

HD95 is the max of the two directed 95th-percentile surface distances with the
nearest-rank (ceil) percentile. An empty mask makes HD95 undefined (None);
undefined cases are reported separately, never folded into aggregates.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AllUndefined, EmptyInput
from .morphology import distance_transform, extract_surface
from .volume import Mask3D


class MetricField(enum.Enum):
    DICE = "dice"
    HD95 = "hd95"


@dataclass(frozen=True)
class SegMetrics:
    """Per-case Dice and HD95 (None when undefined)."""

    case_id: str
    dice: float
    hd95_mm: float | None

    def as_dict(self) -> dict:
        return {"case_id": self.case_id, "dice": self.dice, "hd95_mm": self.hd95_mm}


@dataclass(frozen=True)
class StatsSummary:
    """Mean/std/median plus boxplot quartiles and Tukey whiskers."""

    mean: float
    std: float
    median: float
    q1: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    n: int
    n_undefined: int

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "whisker_lo": self.whisker_lo,
            "whisker_hi": self.whisker_hi,
            "n": self.n,
            "n_undefined": self.n_undefined,
        }


def dice(a: Mask3D, b: Mask3D) -> float:
    """2|A∩B| / (|A|+|B|); both empty -> 1.0, exactly one empty -> 0.0."""
    a.require_same_grid(b, "dice")
    na = a.count
    nb = b.count
    if na == 0 and nb == 0:
        return 1.0
    if na == 0 or nb == 0:
        return 0.0
    inter = int((a.data & b.data).sum())
    return 2.0 * inter / (na + nb)


def _nearest_rank_p95(sorted_vals: np.ndarray) -> float:
    k = math.ceil(0.95 * sorted_vals.size)
    return float(sorted_vals[k - 1])


def hd95(
    a: Mask3D, b: Mask3D, spacing: tuple[float, float, float] | None = None
) -> float | None:
    """95th-percentile Hausdorff distance (mm) between the mask surfaces.

    Directed distances are Euclidean from each surface voxel of one mask to the
    nearest surface voxel of the other; the result is the max of the two
    directed nearest-rank 95th percentiles. Returns None when either mask is
    empty.
    """
    a.require_same_grid(b, "hd95")
    if a.is_empty or b.is_empty:
        return None
    if spacing is None:
        spacing = a.spacing
    surf_a = extract_surface(a)
    surf_b = extract_surface(b)
    dist_to_b = distance_transform(surf_b, spacing)
    dist_to_a = distance_transform(surf_a, spacing)
    d_ab = np.sort(dist_to_b[surf_a.data])
    d_ba = np.sort(dist_to_a[surf_b.data])
    return max(_nearest_rank_p95(d_ab), _nearest_rank_p95(d_ba))


def evaluate_pair(case_id: str, pred: Mask3D, gt: Mask3D) -> SegMetrics:
    """Dice + HD95 for one predicted/ground-truth mask pair."""
    return SegMetrics(case_id=case_id, dice=dice(pred, gt), hd95_mm=hd95(pred, gt))


def aggregate_stats(cases: list[SegMetrics], field: MetricField) -> StatsSummary:
    """Aggregate one metric over cases: population mean/std, linear-interpolation
    quartiles, Tukey whiskers. Undefined HD95 cases are only counted."""
    if not cases:
        raise EmptyInput("no cases to aggregate")
    if field is MetricField.DICE:
        values = [c.dice for c in cases]
        n_undefined = 0
    else:
        values = [c.hd95_mm for c in cases if c.hd95_mm is not None]
        n_undefined = sum(1 for c in cases if c.hd95_mm is None)
        if not values:
            raise AllUndefined("every case has undefined HD95")

    x = np.asarray(values, dtype=np.float64)
    q1, med, q3 = (float(v) for v in np.quantile(x, [0.25, 0.5, 0.75], method="linear"))
    iqr = q3 - q1
    inliers_lo = x[x >= q1 - 1.5 * iqr]
    inliers_hi = x[x <= q3 + 1.5 * iqr]
    return StatsSummary(
        mean=float(x.mean()),
        std=float(x.std()),
        median=med,
        q1=q1,
        q3=q3,
        whisker_lo=float(inliers_lo.min()),
        whisker_hi=float(inliers_hi.max()),
        n=int(x.size),
        n_undefined=n_undefined,
    )
