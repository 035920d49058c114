"""Synthetic CT/MR phantoms with known construction masks, for tests and demos."""

from __future__ import annotations

import numpy as np

from .volume import Mask3D, Modality, Volume3D


def _rotation(deg: tuple[float, float, float]) -> np.ndarray:
    ax, ay, az = np.radians(deg)
    cx, sx = np.cos(ax), np.sin(ax)
    cy, sy = np.cos(ay), np.sin(ay)
    cz, sz = np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


def _ellipsoid(shape, spacing, center_mm, radii_mm, rotation_deg=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Boolean ellipsoid; center and radii in mm, optionally rotated."""
    grids = np.indices(shape, dtype=float)
    for ax in range(3):
        grids[ax] = grids[ax] * spacing[ax] - center_mm[ax]
    rot = _rotation(rotation_deg)
    # rotate world offsets into the ellipsoid frame
    p = np.einsum("ab,bxyz->axyz", rot.T, grids)
    q = sum((p[ax] / radii_mm[ax]) ** 2 for ax in range(3))
    return q <= 1.0


def _default_affine(spacing) -> np.ndarray:
    aff = np.eye(4)
    aff[0, 0], aff[1, 1], aff[2, 2] = spacing
    return aff


def body_phantom(
    shape=(64, 64, 64),
    spacing=(1.5, 1.5, 1.5),
    *,
    radii_mm=(32.0, 26.0, 40.0),
    center_mm=None,
    rotation_deg=(0.0, 0.0, 0.0),
    tissue_hu=40.0,
    air_hu=-1000.0,
    cavity_hu=-800.0,
    n_cavities=2,
    noise_sigma=15.0,
    seed=0,
) -> tuple[Volume3D, Mask3D]:
    """CT-like ellipsoid body in noisy air, with internal low-density cavities.

    Returns the volume and the construction foreground mask (the solid
    ellipsoid: cavities count as anatomy).
    """
    rng = np.random.default_rng(seed)
    if center_mm is None:
        center_mm = tuple((s - 1) * sp / 2 for s, sp in zip(shape, spacing))

    body = _ellipsoid(shape, spacing, center_mm, radii_mm, rotation_deg)
    data = np.full(shape, air_hu)
    data[body] = tissue_hu

    inner = np.asarray(radii_mm) * 0.55
    for _ in range(n_cavities):
        off = (rng.random(3) * 2 - 1) * inner * 0.6
        cav_center = np.asarray(center_mm) + _rotation(rotation_deg) @ off
        cav_radii = np.maximum(inner * (0.2 + 0.3 * rng.random(3)), 2.0)
        cav = _ellipsoid(shape, spacing, cav_center, cav_radii, rotation_deg) & body
        data[cav] = cavity_hu

    if noise_sigma > 0:
        data = data + rng.normal(0.0, noise_sigma, size=shape)

    affine = _default_affine(spacing)
    vol = Volume3D(data, spacing, affine, Modality.CT)
    return vol, Mask3D(body, spacing, affine)


def add_padding_slab(
    vol: Volume3D, axis: int = 0, thickness: int = 6, value: float = 0.0
) -> Volume3D:
    """Overwrite a border slab with an exact constant (reconstruction-padding stand-in)."""
    data = vol.data.copy()
    sl = [slice(None)] * 3
    sl[axis] = slice(0, thickness)
    data[tuple(sl)] = value
    return vol.with_data(data)


def head_phantom(
    shape=(64, 64, 64),
    spacing=(1.0, 1.0, 1.0),
    *,
    radii_mm=(22.0, 25.0, 24.0),
    center_mm=None,
    tissue_level=1000.0,
    tissue_noise=60.0,
    air_level=40.0,
    air_noise=12.0,
    seed=0,
) -> tuple[Volume3D, Mask3D]:
    """MR-like bright textured head in dim nonzero air; returns volume + head mask.

    The grid is RAS-aligned: voxel axes map to lateral / anterior / superior.
    """
    rng = np.random.default_rng(seed)
    if center_mm is None:
        center_mm = tuple((s - 1) * sp / 2 for s, sp in zip(shape, spacing))

    head = _ellipsoid(shape, spacing, center_mm, radii_mm)
    data = air_level + rng.normal(0.0, air_noise, size=shape)
    data = np.abs(data) + 1.0  # strictly positive air, never exactly zero
    data[head] = tissue_level + rng.normal(0.0, tissue_noise, size=shape)[head]

    affine = _default_affine(spacing)
    vol = Volume3D(data, spacing, affine, Modality.MR)
    return vol, Mask3D(head, spacing, affine)
