"""Per-image feature assembly: global photometry, object placement from
accepted boxes, and (optionally) GrabCut-based regional statistics."""

from __future__ import annotations

import sys

from .corpus import FeatureVector, Image
from .detect import object_features, union_hull
from .errors import SegmentationError
from .photometry import global_features
from .segment import GrabCutParams, grabcut, regional_features


def extract_features(img: Image, boxes, *, do_segment: bool = False,
                     grabcut_params: GrabCutParams | None = None) -> FeatureVector:
    """Compute the full feature vector for one image.

    Regional features are filled only when `do_segment` is set and at
    least one box is present; a seed hull covering the whole canvas skips
    segmentation with a warning rather than failing the image.
    """
    gf = global_features(img)
    of = object_features(boxes, img.width, img.height)
    fv = FeatureVector(
        width=gf.width, height=gf.height, resolution=gf.resolution,
        brightness=gf.brightness, contrast=gf.contrast,
        dynamic_range=gf.dynamic_range,
        object_cnt=of.object_cnt, has_detection=of.has_detection,
        top_space=of.top_space, bottom_space=of.bottom_space,
        left_space=of.left_space, right_space=of.right_space,
        x_asymmetry=of.x_asymmetry, y_asymmetry=of.y_asymmetry,
    )
    if do_segment and boxes:
        try:
            mask = grabcut(img, union_hull(boxes), grabcut_params)
        except SegmentationError as exc:
            print(f"warning: segmentation skipped: {exc}", file=sys.stderr)
            return fv
        rf = regional_features(img, mask)
        fv.fgbg_area_ratio = rf.fgbg_area_ratio
        fv.bgfg_brightness_diff = rf.bgfg_brightness_diff
        fv.bgfg_contrast_diff = rf.bgfg_contrast_diff
        fv.bg_lightness = rf.bg_lightness
        fv.bg_nonuniformity = rf.bg_nonuniformity
    return fv
