"""GrabCut segmentation and the regional features computed from masks."""

import itertools

import numpy as np
import pytest

from photoscore.corpus import BoundingBox, Image
from photoscore.errors import SegmentationError
from photoscore.segment import (
    GrabCutParams,
    Mask,
    RegionalFeatures,
    _labeling_energy,
    _min_cut,
    _pairwise_weights,
    grabcut,
    load_mask_png,
    regional_features,
    save_mask_png,
)


def two_region_image(size=64, seed=0, margin=3):
    """Colored shape on a near-white ground with per-pixel noise."""
    rng = np.random.default_rng(seed)
    px = np.clip(rng.normal(0.92, 0.02, size=(size, size, 3)), 0, 1)
    top, left = int(rng.integers(8, 24)), int(rng.integers(8, 24))
    hgt, wid = int(rng.integers(16, 32)), int(rng.integers(16, 32))
    truth = np.zeros((size, size), dtype=bool)
    truth[top:top + hgt, left:left + wid] = True
    color = rng.uniform(0.05, 0.6, size=3)
    px[truth] = np.clip(color + rng.normal(0, 0.02, size=(int(truth.sum()), 3)),
                        0, 1)
    box = BoundingBox(max(0, left - margin), max(0, top - margin),
                      min(size, left + wid + margin),
                      min(size, top + hgt + margin))
    return Image(px), truth, box


def mask_iou(a, b):
    inter = np.logical_and(a, b).sum()
    union = np.logical_or(a, b).sum()
    return inter / union


class TestGrabCut:
    def test_synthetic_oracle_iou(self):
        hits = 0
        for seed in range(20):
            img, truth, box = two_region_image(seed=seed)
            mask = grabcut(img, box, GrabCutParams(seed=seed))
            if mask_iou(mask.foreground, truth) >= 0.95:
                hits += 1
        assert hits >= 18

    def test_hard_background_outside_box(self):
        img, _, box = two_region_image(seed=30)
        mask = grabcut(img, box, GrabCutParams(seed=1))
        outside = np.ones_like(mask.foreground)
        outside[box.top:box.bottom, box.left:box.right] = False
        assert not mask.foreground[outside].any()

    def test_deterministic(self):
        img, _, box = two_region_image(seed=31)
        a = grabcut(img, box, GrabCutParams(seed=7))
        b = grabcut(img, box, GrabCutParams(seed=7))
        assert np.array_equal(a.foreground, b.foreground)
        assert a.energy_trace == b.energy_trace

    def test_energy_non_increasing(self):
        for seed in range(8):
            img, _, box = two_region_image(seed=40 + seed)
            mask = grabcut(img, box, GrabCutParams(seed=seed, max_iterations=8,
                                                   convergence_fraction=0.0))
            trace = mask.energy_trace
            assert len(trace) >= 1
            for earlier, later in zip(trace, trace[1:]):
                assert later <= earlier + 1e-9

    def test_full_image_box_rejected(self):
        img, _, _ = two_region_image(seed=50)
        with pytest.raises(SegmentationError, match="background seed"):
            grabcut(img, BoundingBox(0, 0, 64, 64), GrabCutParams())

    def test_uniform_image_is_degenerate_but_defined(self):
        img = Image(np.full((16, 16, 3), 0.5))
        mask = grabcut(img, BoundingBox(4, 4, 12, 12), GrabCutParams(seed=0))
        outside = np.ones((16, 16), dtype=bool)
        outside[4:12, 4:12] = False
        assert not mask.foreground[outside].any()

    def test_param_validation(self):
        with pytest.raises(ValueError):
            GrabCutParams(gmm_components=0)
        with pytest.raises(ValueError):
            GrabCutParams(gamma=0)
        with pytest.raises(ValueError):
            GrabCutParams(max_iterations=0)


class TestMinCutExactness:
    def test_matches_brute_force(self):
        # the graph construction + max-flow must realize the exact minimum
        # of the data + smoothness energy over all in-box labelings
        for trial in range(40):
            rng = np.random.default_rng(trial)
            h = w = 6
            px = np.where(rng.random((h, w, 1)) < 0.5,
                          rng.random((h, w, 3)) * 0.1, 0.9)
            inbox = np.zeros((h, w), dtype=bool)
            top, left = rng.integers(0, 2, 2)
            inbox[top:top + 4, left:left + 3] = True
            node_ids = np.full((h, w), -1, dtype=np.int64)
            node_ids[inbox] = np.arange(int(inbox.sum()))
            weights, _ = _pairwise_weights(px, 50.0)
            d_fg = rng.normal(0, 20, (h, w))
            d_bg = rng.normal(0, 20, (h, w))

            cut = _min_cut(node_ids, inbox, d_fg, d_bg, weights, h, w)
            cut_energy = _labeling_energy(cut, d_fg, d_bg, weights, h, w)

            best = np.inf
            coords = np.argwhere(inbox)
            for bits in itertools.product([False, True], repeat=len(coords)):
                lab = np.zeros((h, w), dtype=bool)
                for bit, (y, x) in zip(bits, coords):
                    lab[y, x] = bit
                best = min(best,
                           _labeling_energy(lab, d_fg, d_bg, weights, h, w))
            assert cut_energy == pytest.approx(best, abs=1e-3)


class TestRegionalFeatures:
    def _mask(self, fg):
        return Mask(foreground=fg)

    def test_pure_white_background(self):
        px = np.ones((10, 10, 3))
        px[2:6, 2:6] = [0.2, 0.3, 0.4]
        fg = np.zeros((10, 10), dtype=bool)
        fg[2:6, 2:6] = True
        rf = regional_features(Image(px), self._mask(fg))
        assert rf.bg_lightness == pytest.approx(0.0, abs=1e-12)
        assert rf.bg_nonuniformity == pytest.approx(0.0, abs=1e-12)

    def test_pure_black_background(self):
        px = np.zeros((10, 10, 3))
        px[2:6, 2:6] = 0.9
        fg = np.zeros((10, 10), dtype=bool)
        fg[2:6, 2:6] = True
        rf = regional_features(Image(px), self._mask(fg))
        assert rf.bg_lightness == pytest.approx(1.0)

    def test_area_ratio_formula(self):
        px = np.full((100, 100, 3), 0.5)
        fg = np.zeros((100, 100), dtype=bool)
        fg[:25, :100] = True  # 2500 foreground pixels
        rf = regional_features(Image(px), self._mask(fg))
        assert rf.fgbg_area_ratio == pytest.approx(2500 / 7500)
        assert rf.fgbg_area_ratio == pytest.approx(0.3333, abs=1e-4)

    def test_brightness_and_contrast_differences(self):
        px = np.zeros((4, 4, 3))
        px[:, :2] = 1.0  # left half white = background
        fg = np.zeros((4, 4), dtype=bool)
        fg[:, 2:] = True
        rf = regional_features(Image(px), self._mask(fg))
        assert rf.bgfg_brightness_diff == pytest.approx(1.0)
        assert rf.bgfg_contrast_diff == pytest.approx(0.0)  # both uniform

    def test_swapping_regions_negates_differences(self):
        rng = np.random.default_rng(3)
        px = rng.random((12, 12, 3))
        fg = rng.random((12, 12)) < 0.4
        if not fg.any() or fg.all():
            fg[0, 0] = True
            fg[1, 1] = False
        a = regional_features(Image(px), self._mask(fg))
        b = regional_features(Image(px), self._mask(~fg))
        assert a.bgfg_brightness_diff == pytest.approx(-b.bgfg_brightness_diff)
        assert a.bgfg_contrast_diff == pytest.approx(-b.bgfg_contrast_diff)

    def test_empty_background(self):
        px = np.full((5, 5, 3), 0.5)
        rf = regional_features(Image(px), self._mask(np.ones((5, 5), dtype=bool)))
        assert rf.fgbg_area_ratio == float("inf")
        assert rf.bg_lightness is None
        assert rf.bg_nonuniformity is None
        assert rf.bgfg_brightness_diff is None

    def test_empty_foreground(self):
        px = np.full((5, 5, 3), 0.25)
        rf = regional_features(Image(px), self._mask(np.zeros((5, 5), dtype=bool)))
        assert rf.fgbg_area_ratio == 0.0
        assert rf.bgfg_brightness_diff is None
        assert rf.bg_lightness is not None

    def test_nonuniformity_zero_iff_single_luminance(self):
        px = np.zeros((6, 6, 3))
        px[:, :, 0] = 0.3  # uniform luminance background
        fg = np.zeros((6, 6), dtype=bool)
        fg[2:4, 2:4] = True
        rf = regional_features(Image(px), self._mask(fg))
        assert rf.bg_nonuniformity == pytest.approx(0.0, abs=1e-15)
        px2 = px.copy()
        px2[0, 0, 0] = 0.9
        rf2 = regional_features(Image(px2), self._mask(fg))
        assert rf2.bg_nonuniformity > 0.0

    def test_traversal_order_invariance(self):
        rng = np.random.default_rng(8)
        px = rng.random((9, 9, 3))
        fg = rng.random((9, 9)) < 0.5
        fg[0, 0], fg[1, 1] = True, False
        a = regional_features(Image(px), self._mask(fg))
        b = regional_features(Image(px[::-1, ::-1].copy()),
                              self._mask(fg[::-1, ::-1].copy()))
        for field in ("fgbg_area_ratio", "bgfg_brightness_diff",
                      "bgfg_contrast_diff", "bg_lightness", "bg_nonuniformity"):
            assert getattr(a, field) == pytest.approx(getattr(b, field),
                                                      abs=1e-12)

    def test_mismatched_mask(self):
        with pytest.raises(ValueError):
            regional_features(Image(np.zeros((4, 4, 3))),
                              self._mask(np.zeros((5, 5), dtype=bool)))


class TestMaskPng:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        fg = rng.random((16, 12)) < 0.5
        path = tmp_path / "mask.png"
        save_mask_png(Mask(foreground=fg), path)
        back = load_mask_png(path)
        assert np.array_equal(back.foreground, fg)

    def test_binary_levels(self, tmp_path):
        from PIL import Image as PILImage

        fg = np.zeros((4, 4), dtype=bool)
        fg[1, 1] = True
        path = tmp_path / "mask.png"
        save_mask_png(Mask(foreground=fg), path)
        with PILImage.open(path) as im:
            values = set(np.asarray(im).ravel().tolist())
        assert values == {0, 255}
