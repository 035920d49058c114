import numpy as np
import pytest

from voxprep.errors import EmptyMask
from voxprep.morphology import (
    Connectivity,
    MorphOp,
    StructuringElement,
    binary_morph,
    connected_components,
    distance_transform,
    extract_surface,
    fill_holes,
)

from conftest import make_mask, random_mask
from oracles import (
    FACE6_OFFSETS,
    FULL26_OFFSETS,
    allpairs_distance,
    border_fill_holes,
    flood_fill_components,
    naive_dilate,
    naive_erode,
    naive_surface,
)


class TestStructuringElement:
    def test_ball1_is_plus_sign(self):
        se = StructuringElement.ball(1)
        assert len(se.offsets) == 7

    def test_contains_origin_and_symmetric(self):
        for se in (StructuringElement.ball(2), StructuringElement.box(1),
                   StructuringElement.ball_mm(3.0, (1.0, 1.5, 2.5))):
            rows = {tuple(o) for o in se.offsets}
            assert (0, 0, 0) in rows
            assert all((-a, -b, -c) in rows for a, b, c in rows)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            StructuringElement(np.array([[0, 0, 0], [1, 0, 0]]), "ball")

    def test_ball_mm_anisotropic(self):
        se = StructuringElement.ball_mm(2.0, (1.0, 1.0, 2.0))
        offs = {tuple(o) for o in se.offsets}
        assert (2, 0, 0) in offs
        assert (0, 0, 1) in offs  # 2mm along z
        assert (0, 0, 2) not in offs  # 4mm > radius


class TestBinaryMorphExamples:
    def test_single_voxel_dilate_ball1(self):
        m = np.zeros((5, 5, 5), dtype=bool)
        m[2, 2, 2] = True
        out = binary_morph(make_mask(m), MorphOp.DILATE, StructuringElement.ball(1))
        assert out.count == 7
        assert out.data[2, 2, 2] and out.data[1, 2, 2] and out.data[2, 2, 3]

    def test_close_idempotent(self, rng):
        se = StructuringElement.ball(1)
        for _ in range(10):
            m = random_mask(rng, (10, 10, 10), p=0.4)
            once = binary_morph(m, MorphOp.CLOSE, se)
            twice = binary_morph(once, MorphOp.CLOSE, se)
            assert np.array_equal(once.data, twice.data)

    def test_open_idempotent(self, rng):
        se = StructuringElement.ball(1)
        for _ in range(10):
            m = random_mask(rng, (10, 10, 10), p=0.5)
            once = binary_morph(m, MorphOp.OPEN, se)
            twice = binary_morph(once, MorphOp.OPEN, se)
            assert np.array_equal(once.data, twice.data)

    def test_erode_matches_neighborhood_and_oracle(self, rng):
        se = StructuringElement.ball(1)
        m = random_mask(rng, (12, 12, 12), p=0.6)
        out = binary_morph(m, MorphOp.ERODE, se)
        expected = naive_erode(m.data, [tuple(o) for o in se.offsets])
        assert np.array_equal(out.data, expected)

    @pytest.mark.parametrize("op", [MorphOp.DILATE, MorphOp.ERODE])
    @pytest.mark.parametrize("se_name", ["ball1", "ball2", "box1"])
    def test_random_masks_match_oracle(self, rng, op, se_name):
        se = {
            "ball1": StructuringElement.ball(1),
            "ball2": StructuringElement.ball(2),
            "box1": StructuringElement.box(1),
        }[se_name]
        offsets = [tuple(o) for o in se.offsets]
        for _ in range(10):
            shape = tuple(rng.integers(4, 10, size=3))
            m = random_mask(rng, shape, p=rng.uniform(0.2, 0.7))
            out = binary_morph(m, op, se)
            ref = naive_dilate(m.data, offsets) if op is MorphOp.DILATE else naive_erode(
                m.data, offsets
            )
            assert np.array_equal(out.data, ref)

    def test_monotonicity(self, rng):
        se = StructuringElement.ball(1)
        for _ in range(10):
            m = random_mask(rng, (8, 8, 8), p=0.4)
            dil = binary_morph(m, MorphOp.DILATE, se)
            ero = binary_morph(m, MorphOp.ERODE, se)
            assert np.all(dil.data | ~m.data)  # m subset of dilate(m)
            assert np.all(m.data | ~ero.data)  # erode(m) subset of m

    def test_duality_on_interior_masks(self, rng):
        # pad generously so border handling never bites
        se = StructuringElement.ball(1)
        for _ in range(10):
            inner = rng.random((6, 6, 6)) < 0.5
            m = np.zeros((12, 12, 12), dtype=bool)
            m[3:9, 3:9, 3:9] = inner
            ero = binary_morph(make_mask(m), MorphOp.ERODE, se)
            dil_not = binary_morph(make_mask(~m), MorphOp.DILATE, se)
            assert np.array_equal(ero.data[1:-1, 1:-1, 1:-1], (~dil_not.data)[1:-1, 1:-1, 1:-1])


class TestConnectedComponents:
    def test_two_cubes(self):
        m = np.zeros((8, 8, 8), dtype=bool)
        m[0:2, 0:2, 0:2] = True
        m[5:7, 5:7, 5:7] = True
        comps = connected_components(make_mask(m), Connectivity.FULL26)
        assert comps.count == 2
        assert sorted(comps.sizes) == [8, 8]

    def test_corner_touch_connectivity(self):
        m = np.zeros((6, 6, 6), dtype=bool)
        m[0:2, 0:2, 0:2] = True
        m[2:4, 2:4, 2:4] = True  # touch only at corner (2,2,2)/(1,1,1)
        assert connected_components(make_mask(m), Connectivity.FULL26).count == 1
        assert connected_components(make_mask(m), Connectivity.FACE6).count == 2

    @pytest.mark.parametrize("conn,offsets", [
        (Connectivity.FACE6, FACE6_OFFSETS),
        (Connectivity.FULL26, FULL26_OFFSETS),
    ])
    def test_matches_flood_fill_oracle(self, rng, conn, offsets):
        for _ in range(10):
            m = random_mask(rng, (10, 10, 10), p=0.35)
            comps = connected_components(m, conn)
            ref = flood_fill_components(m.data, offsets)
            assert np.array_equal(comps.labels, ref)
            assert comps.count == ref.max()

    def test_sizes_sum(self, rng):
        m = random_mask(rng, (9, 9, 9), p=0.3)
        comps = connected_components(m)
        assert sum(comps.sizes) == m.count


class TestFillHoles:
    def test_hollow_cube_filled(self):
        m = np.zeros((9, 9, 9), dtype=bool)
        m[2:7, 2:7, 2:7] = True
        m[3:6, 3:6, 3:6] = False
        out = fill_holes(make_mask(m))
        expected = np.zeros((9, 9, 9), dtype=bool)
        expected[2:7, 2:7, 2:7] = True
        assert np.array_equal(out.data, expected)

    def test_no_cavity_unchanged(self):
        m = np.zeros((8, 8, 8), dtype=bool)
        m[2:6, 2:6, 2:6] = True
        out = fill_holes(make_mask(m))
        assert np.array_equal(out.data, m)

    def test_border_open_cavity_unchanged(self):
        # U-shape: cavity connected to the border stays open
        m = np.zeros((9, 9, 9), dtype=bool)
        m[2:7, 2:7, 2:7] = True
        m[3:6, 3:6, 3:9] = False  # channel out through a face
        out = fill_holes(make_mask(m))
        ref = border_fill_holes(m)
        assert np.array_equal(out.data, ref)
        assert np.array_equal(out.data, m)  # nothing filled

    def test_matches_oracle_on_random_masks(self, rng):
        for _ in range(15):
            m = random_mask(rng, (9, 9, 9), p=0.45)
            out = fill_holes(make_mask(m.data))
            assert np.array_equal(out.data, border_fill_holes(m.data))


class TestExtractSurface:
    def test_solid_cube_shell(self):
        m = np.zeros((7, 7, 7), dtype=bool)
        m[2:5, 2:5, 2:5] = True
        out = extract_surface(make_mask(m))
        assert out.count == 26
        assert not out.data[3, 3, 3]

    def test_single_voxel(self):
        m = np.zeros((5, 5, 5), dtype=bool)
        m[2, 2, 2] = True
        out = extract_surface(make_mask(m))
        assert np.array_equal(out.data, m)

    def test_matches_oracle(self, rng):
        for _ in range(15):
            m = random_mask(rng, (10, 10, 10), p=0.5)
            out = extract_surface(m)
            assert np.array_equal(out.data, naive_surface(m.data))


class TestDistanceTransform:
    def test_all_foreground_zero(self):
        m = make_mask(np.ones((5, 5, 5), dtype=bool))
        assert distance_transform(m).max() == 0.0

    def test_345_triangle(self):
        m = np.zeros((8, 8, 8), dtype=bool)
        m[0, 0, 0] = True
        d = distance_transform(make_mask(m), (1.0, 1.0, 1.0))
        assert d[3, 4, 0] == pytest.approx(5.0, abs=1e-12)

    def test_empty_mask_raises(self):
        with pytest.raises(EmptyMask):
            distance_transform(make_mask(np.zeros((4, 4, 4), dtype=bool)))

    def test_matches_allpairs_oracle_anisotropic(self, rng):
        spacing = (1.0, 1.0, 2.5)
        for _ in range(10):
            m = random_mask(rng, (9, 9, 9), p=0.1)
            if m.is_empty:
                continue
            d = distance_transform(make_mask(m.data, spacing=spacing), spacing)
            ref = allpairs_distance(m.data, spacing)
            assert np.abs(d - ref).max() < 1e-9
