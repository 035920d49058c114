"""Foreground-constrained patch sampling with per-patch loss masks.

Patch centers are drawn uniformly from foreground voxels by a counter-based
generator keyed on (seed, patch_index, attempt), so results are identical
across thread counts and platforms. Loss masks zero out anonymized voxels and
out-of-volume padding so they never contribute supervision signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyForeground, GridMismatch, SamplingExhausted
from .volume import Mask3D, Volume3D

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def counter_rand(seed: int, *counters: int) -> int:
    """Stateless 64-bit value from a seed and counter tuple (splitmix64 chain)."""
    x = seed & _MASK64
    for c in counters:
        x = _splitmix64(x ^ (c & _MASK64))
    return _splitmix64(x)


@dataclass(frozen=True)
class PatchSpec:
    """How many patches of what size to draw, and the acceptance rule."""

    size: tuple[int, int, int] = (192, 192, 192)
    count: int = 1
    seed: int = 0
    min_fg_fraction: float = 0.0
    max_attempts_per_patch: int = 1000

    def __post_init__(self):
        size = tuple(int(s) for s in self.size)
        if len(size) != 3 or any(s < 1 for s in size):
            raise ValueError("patch size components must be >= 1")
        object.__setattr__(self, "size", size)
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not (0 <= self.min_fg_fraction <= 1):
            raise ValueError("min_fg_fraction must be in [0, 1]")
        if self.max_attempts_per_patch < 1:
            raise ValueError("max_attempts_per_patch must be >= 1")


@dataclass(frozen=True)
class SampledPatch:
    """One sampled patch: corner origin (may be negative when the patch hangs
    over the volume edge), data, loss mask, and its foreground fraction."""

    origin: tuple[int, int, int]
    data: np.ndarray
    loss_mask: np.ndarray
    fg_fraction: float

    def as_record(self) -> dict:
        return {"origin": list(self.origin), "fg_fraction": self.fg_fraction}


def _crop_with_pad(arr: np.ndarray, origin, size, fill=0):
    """Crop arr[origin : origin+size], zero-filling parts outside the array."""
    out = np.full(size, fill, dtype=arr.dtype)
    src = []
    dst = []
    for ax in range(3):
        lo = origin[ax]
        hi = lo + size[ax]
        src_lo = max(lo, 0)
        src_hi = min(hi, arr.shape[ax])
        if src_lo >= src_hi:
            return out
        src.append(slice(src_lo, src_hi))
        dst.append(slice(src_lo - lo, src_hi - lo))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def make_loss_mask(
    patch_origin: tuple[int, int, int],
    size: tuple[int, int, int],
    anon: Mask3D | None,
    volume_extents: tuple[int, int, int],
) -> np.ndarray:
    """1 on in-volume, non-anonymized voxels; 0 on anonymized voxels and padding."""
    mask = np.zeros(size, dtype=bool)
    dst = []
    src = []
    for ax in range(3):
        lo = patch_origin[ax]
        hi = lo + size[ax]
        src_lo = max(lo, 0)
        src_hi = min(hi, volume_extents[ax])
        if src_lo >= src_hi:
            return mask
        src.append(slice(src_lo, src_hi))
        dst.append(slice(src_lo - lo, src_hi - lo))
    mask[tuple(dst)] = True
    if anon is not None:
        mask[tuple(dst)] &= ~anon.data[tuple(src)]
    return mask


def _draw_patch(vol, fg, anon, spec, patch_index, fg_flat, strides_shape):
    size = spec.size
    half = tuple(s // 2 for s in size)
    patch_vox = size[0] * size[1] * size[2]
    for attempt in range(spec.max_attempts_per_patch):
        r = counter_rand(spec.seed, patch_index, attempt)
        pos = int(fg_flat[r % fg_flat.size])
        center = np.unravel_index(pos, strides_shape)
        origin = tuple(int(c) - h for c, h in zip(center, half))
        fg_crop = _crop_with_pad(fg.data, origin, size)
        fg_fraction = float(fg_crop.sum() / patch_vox)
        if fg_fraction >= spec.min_fg_fraction:
            data = _crop_with_pad(vol.data, origin, size, fill=0.0)
            loss = make_loss_mask(origin, size, anon, vol.extents)
            return SampledPatch(origin, data, loss, fg_fraction)
    raise SamplingExhausted(
        f"patch {patch_index}: no acceptable center in {spec.max_attempts_per_patch} attempts"
    )


def sample_patches(
    vol: Volume3D,
    fg: Mask3D,
    anon: Mask3D | None,
    spec: PatchSpec,
) -> list[SampledPatch]:
    """Draw spec.count patches whose center voxels lie in the foreground mask.

    Rejection-samples centers uniformly from fg until the patch foreground
    fraction reaches spec.min_fg_fraction. Output is fully determined by
    (volume, fg, anon, spec) and ordered by patch index.
    """
    if not fg.same_grid(vol):
        raise GridMismatch("foreground mask grid does not match the volume")
    if anon is not None and not anon.same_grid(vol):
        raise GridMismatch("anonymization mask grid does not match the volume")
    if fg.is_empty:
        raise EmptyForeground("cannot sample patches without foreground voxels")

    fg_flat = np.flatnonzero(fg.data)  # C order: deterministic
    return [
        _draw_patch(vol, fg, anon, spec, i, fg_flat, fg.data.shape)
        for i in range(spec.count)
    ]
