"""Bounding-box geometry and detector evaluation: IoU, annotation
agreement filtering, single-class average precision at IoU 0.5, the
object-placement features, and detection-count contingency tables.

When an image has several accepted boxes, the placement features are
computed from their union hull (a shoe pair occupies the joint extent).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import BoundingBox
from .errors import PhotoscoreError


@dataclass(frozen=True)
class ObjectFeatures:
    object_cnt: int
    has_detection: bool
    top_space: int | None = None
    bottom_space: int | None = None
    left_space: int | None = None
    right_space: int | None = None
    x_asymmetry: float | None = None
    y_asymmetry: float | None = None


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def agreement_filter(pairs, threshold: float = 0.5):
    """Keep annotator box pairs whose IoU is at least `threshold`."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    return [(a, b) for a, b in pairs if iou(a, b) >= threshold]


def threshold_detections(detections, min_confidence: float = 0.90):
    """Drop scored boxes below the confidence threshold (per image)."""
    return {
        image_id: [(box, conf) for box, conf in dets if conf >= min_confidence]
        for image_id, dets in detections.items()
    }


def map50(detections: dict, groundtruth: dict, iou_threshold: float = 0.5) -> float:
    """Single-class average precision at the given IoU threshold.

    `detections` maps image_id -> [(BoundingBox, confidence)], and
    `groundtruth` maps image_id -> [BoundingBox]. Detections are ranked by
    confidence (ties broken by image_id then insertion order); each one is
    a true positive if it has IoU >= threshold with a still-unmatched
    ground-truth box, matching greedily by highest IoU. AP is the area
    under the all-points interpolated precision-recall curve.
    """
    unknown = set(detections) - set(groundtruth)
    if unknown:
        raise PhotoscoreError(
            f"detections reference images without ground truth: {sorted(unknown)[:5]}")
    n_gt = sum(len(b) for b in groundtruth.values())
    if n_gt == 0:
        raise PhotoscoreError("undefined AP: no ground-truth boxes")

    ranked = []
    for image_id in sorted(detections):
        for order, (box, conf) in enumerate(detections[image_id]):
            if not 0.0 <= conf <= 1.0:
                raise ValueError(f"confidence {conf} outside [0, 1]")
            ranked.append((-conf, image_id, order, box))
    ranked.sort(key=lambda t: t[:3])

    matched = {image_id: [False] * len(b) for image_id, b in groundtruth.items()}
    tp = np.zeros(len(ranked))
    for i, (_, image_id, _, box) in enumerate(ranked):
        best_iou, best_j = 0.0, -1
        for j, gt_box in enumerate(groundtruth[image_id]):
            if matched[image_id][j]:
                continue
            v = iou(box, gt_box)
            if v > best_iou:
                best_iou, best_j = v, j
        if best_j >= 0 and best_iou >= iou_threshold:
            matched[image_id][best_j] = True
            tp[i] = 1.0
    if len(ranked) == 0:
        return 0.0

    tp_cum = np.cumsum(tp)
    recall = tp_cum / n_gt
    precision = tp_cum / np.arange(1, len(ranked) + 1)
    # all-points interpolation: running max of precision from the right
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for r, p in zip(recall, envelope):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def union_hull(boxes) -> BoundingBox:
    if not boxes:
        raise ValueError("no boxes to hull")
    return BoundingBox(
        min(b.left for b in boxes), min(b.top for b in boxes),
        max(b.right for b in boxes), max(b.bottom for b in boxes))


def object_features(boxes, width: int, height: int) -> ObjectFeatures:
    """Placement features from the union hull of the accepted boxes."""
    if not boxes:
        return ObjectFeatures(object_cnt=0, has_detection=False)
    hull = union_hull(boxes)
    if not hull.fits(width, height):
        raise ValueError(f"boxes exceed {width}x{height} image")
    left_space = hull.left
    right_space = width - hull.right
    top_space = hull.top
    bottom_space = height - hull.bottom
    return ObjectFeatures(
        object_cnt=len(boxes), has_detection=True,
        top_space=top_space, bottom_space=bottom_space,
        left_space=left_space, right_space=right_space,
        x_asymmetry=abs(right_space - left_space) / width,
        y_asymmetry=abs(top_space - bottom_space) / height,
    )


def detection_label_table(counts_and_labels) -> np.ndarray:
    """3x3 contingency table: rows 0 / 1 / >=2 detections, columns
    Bad / Neutral / Good labels."""
    if not counts_and_labels:
        raise PhotoscoreError("no rows for the detection-label table")
    table = np.zeros((3, 3), dtype=np.int64)
    for object_cnt, label in counts_and_labels:
        row = min(int(object_cnt), 2)
        table[row, int(label)] += 1
    return table


# ---------------------------------------------------------------------------
# Detections / ground-truth JSONL: one object per line,
# {"image_id": str, "boxes": [{"left","top","right","bottom"[,"conf"]}]}
# ---------------------------------------------------------------------------

def load_boxes_jsonl(path, with_confidence: bool):
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                image_id = str(obj["image_id"])
                boxes = []
                for b in obj.get("boxes", []):
                    box = BoundingBox(int(b["left"]), int(b["top"]),
                                      int(b["right"]), int(b["bottom"]))
                    if with_confidence:
                        boxes.append((box, float(b["conf"])))
                    else:
                        boxes.append(box)
            except (KeyError, TypeError, ValueError) as exc:
                raise PhotoscoreError(f"{path}:{lineno}: {exc}") from exc
            out[image_id] = boxes
    return out


def write_boxes_jsonl(boxes_by_image, path, confidences=False):
    lines = []
    for image_id in sorted(boxes_by_image):
        entries = []
        for item in boxes_by_image[image_id]:
            if confidences:
                box, conf = item
                entries.append({"left": box.left, "top": box.top,
                                "right": box.right, "bottom": box.bottom,
                                "conf": conf})
            else:
                entries.append({"left": item.left, "top": item.top,
                                "right": item.right, "bottom": item.bottom})
        lines.append(json.dumps({"image_id": image_id, "boxes": entries}))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
