import numpy as np
import pytest

from segtrack.core import (
    BoundingBox,
    Template,
    TemplateMode,
    binarize,
    crop_mask,
    crop_searching_area,
    davis_palette,
    enclosing_bbox,
    paste_map,
    read_id_mask_png,
    rect_to_mask,
    round_half_up,
    write_id_mask_png,
)
from segtrack.errors import (
    ContractError,
    EmptyTargetError,
    GeometryError,
    ParameterError,
)


def rand_frame(rng, w, h):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


class TestBoundingBox:
    def test_degenerate_rejected(self):
        with pytest.raises(GeometryError):
            BoundingBox(0, 0, 0, 5)
        with pytest.raises(GeometryError):
            BoundingBox(0, 0, 5, -1)

    def test_rounding_half_up(self):
        assert round_half_up(2.5) == 3
        assert round_half_up(2.4) == 2
        assert round_half_up(-0.5) == 0


class TestCrop:
    def test_centered_crop(self):
        f = np.zeros((100, 100, 3), np.uint8)
        sa = crop_searching_area(f, BoundingBox(50, 45, 20, 10), 2)
        assert sa.patch.shape == (20, 40, 3)
        pl = sa.placement
        assert (pl.origin_x, pl.origin_y) == (30, 35)
        assert (pl.pad_left, pl.pad_top, pl.pad_right, pl.pad_bottom) == (0, 0, 0, 0)

    def test_edge_clamping(self):
        f = np.zeros((100, 100, 3), np.uint8)
        sa = crop_searching_area(f, BoundingBox(5, 50, 20, 10), 1)
        assert sa.patch.shape == (10, 20, 3)
        assert sa.placement.pad_left == 5
        assert sa.placement.origin_x == 0

    def test_identity_whole_frame(self):
        rng = np.random.default_rng(3)
        f = rand_frame(rng, 64, 64)
        sa = crop_searching_area(f, BoundingBox(31.5, 31.5, 64, 64), 1)
        assert sa.patch.shape == (64, 64, 3)
        pl = sa.placement
        assert (pl.pad_left, pl.pad_top, pl.pad_right, pl.pad_bottom) == (0, 0, 0, 0)
        np.testing.assert_array_equal(sa.patch, f)

    def test_out_of_frame_fill_is_channel_mean(self):
        f = np.zeros((10, 10, 3), np.uint8)
        f[..., 0] = 100
        f[..., 1] = 50
        sa = crop_searching_area(f, BoundingBox(0, 5, 6, 4), 1)
        assert sa.placement.pad_left == 3
        np.testing.assert_array_equal(sa.patch[:, 0], [[100, 50, 0]] * 4)

    def test_k_below_one_rejected(self):
        f = np.zeros((10, 10, 3), np.uint8)
        with pytest.raises(ParameterError):
            crop_searching_area(f, BoundingBox(5, 5, 4, 4), 0.5)

    def test_zero_area_crop_rejected(self):
        f = np.zeros((10, 10, 3), np.uint8)
        with pytest.raises(GeometryError):
            crop_searching_area(f, BoundingBox(5, 5, 0.3, 4), 1)

    def test_placement_pad_consistency_random(self):
        rng = np.random.default_rng(11)
        f = rand_frame(rng, 31, 17)
        for _ in range(200):
            b = BoundingBox(
                rng.uniform(-10, 40), rng.uniform(-10, 27),
                rng.uniform(0.5, 30), rng.uniform(0.5, 30),
            )
            k = rng.uniform(1, 2)
            pl = crop_searching_area(f, b, k).placement
            assert pl.pad_left + pl.in_w + pl.pad_right == pl.crop_w
            assert pl.pad_top + pl.in_h + pl.pad_bottom == pl.crop_h
            assert 0 <= pl.origin_x <= 31 and 0 <= pl.origin_y <= 17


class TestPaste:
    def test_basic_paste(self):
        from segtrack.core import Placement

        pm = np.ones((4, 4))
        pl = Placement(origin_x=2, origin_y=2, crop_w=4, crop_h=4)
        out = paste_map(pm, pl, 8, 8)
        expected = np.zeros((8, 8))
        expected[2:6, 2:6] = 1
        np.testing.assert_array_equal(out, expected)

    def test_padding_discarded(self):
        from segtrack.core import Placement

        pm = np.ones((4, 6))
        pl = Placement(origin_x=0, origin_y=1, crop_w=6, crop_h=4, pad_left=2)
        out = paste_map(pm, pl, 8, 8)
        assert out.sum() == 4 * 4
        assert out[1:5, 0:4].all()

    def test_dim_mismatch(self):
        from segtrack.core import Placement

        pl = Placement(origin_x=0, origin_y=0, crop_w=5, crop_h=5)
        with pytest.raises(ContractError):
            paste_map(np.ones((4, 4)), pl, 8, 8)

    def test_crop_paste_roundtrip_random(self):
        # paste(crop-restriction of M) agrees with M on the in-frame crop
        # region and is 0 elsewhere
        rng = np.random.default_rng(7)
        f = rand_frame(rng, 16, 16)
        for _ in range(300):
            m = (rng.random((16, 16)) < 0.4).astype(np.uint8)
            b = BoundingBox(
                rng.uniform(-4, 20), rng.uniform(-4, 20),
                rng.uniform(1, 18), rng.uniform(1, 18),
            )
            sa = crop_searching_area(f, b, rng.uniform(1, 2))
            pl = sa.placement
            restricted = crop_mask(m, pl).astype(np.float64)
            pasted = paste_map(restricted, pl, 16, 16)
            region = np.zeros((16, 16), bool)
            if pl.in_w > 0 and pl.in_h > 0:
                region[
                    pl.origin_y : pl.origin_y + pl.in_h,
                    pl.origin_x : pl.origin_x + pl.in_w,
                ] = True
            np.testing.assert_array_equal(pasted[region], m[region])
            assert (pasted[~region] == 0).all()


class TestEnclosingBbox:
    def test_block(self):
        m = np.zeros((10, 10), np.uint8)
        m[2:6, 3:8] = 1
        assert enclosing_bbox(m) == BoundingBox(5.0, 3.5, 5, 4)

    def test_single_pixel(self):
        m = np.zeros((5, 5), np.uint8)
        m[0, 0] = 1
        assert enclosing_bbox(m) == BoundingBox(0, 0, 1, 1)

    def test_empty_rejected(self):
        with pytest.raises(EmptyTargetError):
            enclosing_bbox(np.zeros((5, 5), np.uint8))

    def test_roundtrip_with_rect_to_mask(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            x0 = int(rng.integers(0, 10))
            y0 = int(rng.integers(0, 10))
            w = int(rng.integers(1, 10))
            h = int(rng.integers(1, 10))
            b = BoundingBox((2 * x0 + w - 1) / 2.0, (2 * y0 + h - 1) / 2.0, w, h)
            assert enclosing_bbox(rect_to_mask(b, 20, 20)) == b


class TestRectToMask:
    def test_small_box(self):
        assert rect_to_mask(BoundingBox(2, 2, 2, 2), 4, 4).sum() == 4

    def test_full_frame(self):
        m = rect_to_mask(BoundingBox(1.5, 1.5, 4, 4), 4, 4)
        assert m.all()

    def test_fully_outside_is_empty(self):
        assert rect_to_mask(BoundingBox(100, 100, 5, 5), 10, 10).sum() == 0

    def test_area_property_random(self):
        rng = np.random.default_rng(9)
        for _ in range(300):
            w = rng.uniform(1, 10)
            h = rng.uniform(1, 10)
            b = BoundingBox(rng.uniform(15, 25), rng.uniform(15, 25), w, h)
            area = rect_to_mask(b, 40, 40).sum()
            assert area == round_half_up(w) * round_half_up(h)


class TestBinarize:
    def test_strict_threshold(self):
        pm = np.full((3, 3), 0.5)
        assert binarize(pm, 0.5).sum() == 0

    def test_tau_zero(self):
        pm = np.array([[0.0, 0.1], [0.0, 0.0]])
        np.testing.assert_array_equal(binarize(pm, 0.0), [[0, 1], [0, 0]])

    def test_bad_tau(self):
        with pytest.raises(ParameterError):
            binarize(np.zeros((2, 2)), 1.5)

    def test_commutes_with_paste(self):
        rng = np.random.default_rng(13)
        f = rand_frame(rng, 16, 16)
        for _ in range(100):
            b = BoundingBox(rng.uniform(0, 16), rng.uniform(0, 16),
                            rng.uniform(1, 12), rng.uniform(1, 12))
            sa = crop_searching_area(f, b, rng.uniform(1, 2))
            pm = rng.random((sa.placement.crop_h, sa.placement.crop_w))
            tau = rng.random()
            a = binarize(paste_map(pm, sa.placement, 16, 16), tau)
            bb = paste_map(
                binarize(pm, tau).astype(np.float64), sa.placement, 16, 16
            ).astype(np.uint8)
            np.testing.assert_array_equal(a, bb)


class TestTemplateValidation:
    def test_bbox_channel_only_bbox(self):
        Template(mode=TemplateMode.BBOX_CHANNEL, bbox=BoundingBox(1, 1, 2, 2))
        with pytest.raises(ContractError):
            Template(
                mode=TemplateMode.BBOX_CHANNEL,
                bbox=BoundingBox(1, 1, 2, 2),
                crop=np.zeros((2, 2, 3), np.uint8),
            )

    def test_crop_with_mask_dims(self):
        with pytest.raises(ContractError):
            Template(
                mode=TemplateMode.CROP_WITH_MASK,
                bbox=BoundingBox(1, 1, 2, 2),
                crop=np.zeros((2, 2, 3), np.uint8),
                mask=np.zeros((3, 3), np.uint8),
            )


class TestPngIO:
    def test_id_mask_roundtrip(self, tmp_path):
        ids = np.zeros((6, 7), np.int32)
        ids[1:3, 2:5] = 1
        ids[4:, :2] = 2
        p = tmp_path / "m.png"
        write_id_mask_png(p, ids)
        np.testing.assert_array_equal(read_id_mask_png(p), ids)

    def test_palette_shape(self):
        pal = davis_palette()
        assert len(pal) == 768
        assert pal[3:6] == [128, 0, 0]  # object 1 is DAVIS dark red
