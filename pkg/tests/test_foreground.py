import numpy as np
import pytest

from voxprep.errors import DegenerateVolume, EmptyForeground
from voxprep.foreground import (
    ForegroundParams,
    KeepComponents,
    ThresholdMode,
    detect_constant_padding,
    otsu_threshold,
    segment_foreground,
)
from voxprep.metrics import dice
from voxprep.morphology import Connectivity, connected_components
from voxprep.phantoms import add_padding_slab, body_phantom
from voxprep.volume import Modality

from conftest import make_volume
from oracles import exhaustive_otsu


class TestOtsuThreshold:
    def test_bimodal_separates_exactly(self):
        data = np.concatenate([np.zeros(32), np.full(32, 100.0)]).reshape(4, 4, 4)
        t = otsu_threshold(make_volume(data))
        assert 0.0 < t < 100.0
        assert ((data > t) == (data == 100.0)).all()

    def test_constant_raises(self):
        with pytest.raises(DegenerateVolume):
            otsu_threshold(make_volume(np.full((4, 4, 4), 3.0)))

    def test_matches_exhaustive_scan(self, rng):
        for _ in range(20):
            lo = rng.normal(0, 1, size=600)
            hi = rng.normal(10, 2, size=400)
            data = rng.permutation(np.concatenate([lo, hi]))[:1000].reshape(10, 10, 10)
            t = otsu_threshold(make_volume(data))
            assert t == pytest.approx(exhaustive_otsu(data), abs=1e-12)

    def test_shift_equivariance(self, rng):
        data = rng.normal(0, 1, size=(8, 8, 8))
        data[:4] += 10
        t0 = otsu_threshold(make_volume(data))
        t1 = otsu_threshold(make_volume(data + 123.5))
        assert t1 - t0 == pytest.approx(123.5, abs=1e-9)


class TestDetectConstantPadding:
    def test_corner_octant_flagged(self, rng):
        data = -1000.0 + rng.normal(0, 5, size=(16, 16, 16))
        data[:8, :8, :8] = -1024.0
        report = detect_constant_padding(make_volume(data))
        expected = np.zeros((16, 16, 16), dtype=bool)
        expected[:8, :8, :8] = True
        assert np.array_equal(report.padding_mask.data, expected)
        assert report.padding_values == [-1024.0]
        assert report.padded_fraction == pytest.approx(8**3 / 16**3)

    def test_no_repeated_value_empty(self, rng):
        data = rng.normal(size=(10, 10, 10))
        report = detect_constant_padding(make_volume(data))
        assert report.padding_mask.is_empty
        assert report.padding_values == []

    def test_interior_blob_not_flagged(self, rng):
        data = rng.normal(size=(16, 16, 16))
        data[4:12, 4:12, 4:12] = 7.0  # 512/4096 voxels, well above 1%, but interior
        report = detect_constant_padding(make_volume(data))
        assert report.padding_mask.is_empty

    def test_below_one_percent_ignored(self, rng):
        data = rng.normal(size=(16, 16, 16))
        data[0, 0, :30] = 5.0  # border-touching but tiny
        report = detect_constant_padding(make_volume(data))
        assert report.padding_mask.is_empty


class TestSegmentForeground:
    def test_body_phantom_cavities_filled(self):
        vol, truth = body_phantom(seed=3)
        mask = segment_foreground(vol, ForegroundParams.defaults_for(Modality.CT))
        assert dice(mask, truth) >= 0.99

    def test_otsu_path_works_on_ct_phantom(self):
        vol, truth = body_phantom(seed=4)
        mask = segment_foreground(vol, ForegroundParams())
        assert dice(mask, truth) >= 0.99

    def test_padding_slab_changes_mask_below_tenth_percent(self):
        vol, truth = body_phantom(seed=5)
        params = ForegroundParams.defaults_for(Modality.CT)
        base = segment_foreground(vol, params)
        padded = segment_foreground(add_padding_slab(vol, axis=0, thickness=6), params)
        changed = np.logical_xor(base.data, padded.data).sum()
        assert changed < 0.001 * base.data.size
        assert not (padded.data[:6] & (vol.data[:6] == 0.0)).any()

    def test_all_air_raises(self, rng):
        data = -1000.0 + rng.normal(0, 5, size=(12, 12, 12))
        vol = make_volume(data, modality=Modality.CT)
        with pytest.raises(EmptyForeground):
            segment_foreground(
                vol,
                ForegroundParams(threshold_mode=ThresholdMode.FIXED_CT, threshold_value=-500.0),
            )

    def test_largest_yields_single_component(self):
        vol, _ = body_phantom(seed=6)
        params = ForegroundParams(
            threshold_mode=ThresholdMode.FIXED_CT,
            threshold_value=-500.0,
            keep_components=KeepComponents.LARGEST,
        )
        mask = segment_foreground(vol, params)
        assert connected_components(mask, Connectivity.FULL26).count == 1

    def test_mask_never_intersects_padding(self):
        vol, _ = body_phantom(seed=7)
        padded_vol = add_padding_slab(vol, axis=1, thickness=8, value=0.0)
        report = detect_constant_padding(padded_vol)
        mask = segment_foreground(padded_vol, ForegroundParams.defaults_for(Modality.CT))
        assert not (mask.data & report.padding_mask.data).any()

    def test_otsu_shift_equivariance_of_pipeline(self):
        vol, _ = body_phantom(seed=8, noise_sigma=10)
        base = segment_foreground(vol, ForegroundParams())
        shifted = segment_foreground(vol.with_data(vol.data + 500.0), ForegroundParams())
        assert np.array_equal(base.data, shifted.data)

    def test_constant_volume_raises_degenerate(self):
        vol = make_volume(np.full((8, 8, 8), 1.0))
        with pytest.raises((DegenerateVolume, EmptyForeground)):
            segment_foreground(vol, ForegroundParams())
