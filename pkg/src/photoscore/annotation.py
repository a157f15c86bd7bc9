"""Crowdsourced rating pipeline: per-rater standardization, disagreement
filtering, discretization into three ordered labels, and inter-rater
reliability.

Standard deviations are population (divide-by-N) throughout, which makes
the degenerate single-rating case well defined via the z = 0 rule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .corpus import RatingRecord
from .errors import PhotoscoreError
from .stats import pearson


class QualityLabel(IntEnum):
    BAD = 0
    NEUTRAL = 1
    GOOD = 2


@dataclass(frozen=True)
class StandardizedRating:
    image_id: str
    rater_id: str
    z: float


@dataclass(frozen=True)
class ImageScore:
    image_id: str
    mean_z: float
    std_z: float
    n_raters: int


def standardize_raters(ratings: list[RatingRecord]) -> list[StandardizedRating]:
    """Map each rater's scores to zero mean and unit population variance.

    Degenerate raters (a single rating, or zero spread) emit z = 0 for all
    of their ratings. Output order matches input order.
    """
    by_rater: dict[str, list[int]] = {}
    for r in ratings:
        by_rater.setdefault(r.rater_id, []).append(r.raw_score)
    stats = {}
    for rater_id, scores in by_rater.items():
        arr = np.asarray(scores, dtype=np.float64)
        mean = float(arr.mean())
        std = float(arr.std())  # population std
        stats[rater_id] = (mean, std)
    out = []
    for r in ratings:
        mean, std = stats[r.rater_id]
        z = 0.0 if std == 0.0 else (r.raw_score - mean) / std
        out.append(StandardizedRating(r.image_id, r.rater_id, z))
    return out


def aggregate_image_scores(std_ratings: list[StandardizedRating]) -> list[ImageScore]:
    """Mean and population std of z per image, sorted by image_id."""
    if not std_ratings:
        raise PhotoscoreError("no standardized ratings to aggregate")
    by_image: dict[str, list[float]] = {}
    for r in std_ratings:
        by_image.setdefault(r.image_id, []).append(r.z)
    out = []
    for image_id in sorted(by_image):
        zs = np.asarray(by_image[image_id], dtype=np.float64)
        out.append(ImageScore(image_id, float(zs.mean()), float(zs.std()), len(zs)))
    return out


def filter_by_disagreement(scores: list[ImageScore],
                           retain_fraction: float = 0.6) -> list[ImageScore]:
    """Keep the floor(retain_fraction * N) images with smallest rating std.

    Ties break by image_id ascending; the result is sorted by image_id.
    """
    if not 0.0 < retain_fraction <= 1.0:
        raise ValueError(f"retain_fraction must be in (0, 1], got {retain_fraction}")
    n_keep = math.floor(retain_fraction * len(scores))
    ranked = sorted(scores, key=lambda s: (s.std_z, s.image_id))
    return sorted(ranked[:n_keep], key=lambda s: s.image_id)


def _round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def discretize(score: ImageScore) -> QualityLabel:
    """Round the mean z (half away from zero); sign picks the label."""
    r = _round_half_away(score.mean_z)
    if r > 0:
        return QualityLabel.GOOD
    if r < 0:
        return QualityLabel.BAD
    return QualityLabel.NEUTRAL


def mean_pairwise_pearson(std_ratings: list[StandardizedRating],
                          min_common: int = 5) -> tuple[float, float, int]:
    """Average Pearson correlation over rater pairs with enough overlap.

    Pairs sharing fewer than `min_common` images, or whose shared scores
    are constant, are skipped. Returns (mean rho, standard error of the
    mean, number of pairs).
    """
    by_rater: dict[str, dict[str, float]] = {}
    for r in std_ratings:
        by_rater.setdefault(r.rater_id, {})[r.image_id] = r.z
    rhos = []
    for ra, rb in itertools.combinations(sorted(by_rater), 2):
        common = sorted(set(by_rater[ra]) & set(by_rater[rb]))
        if len(common) < min_common:
            continue
        xa = np.array([by_rater[ra][i] for i in common])
        xb = np.array([by_rater[rb][i] for i in common])
        if xa.std() == 0.0 or xb.std() == 0.0:
            continue
        rhos.append(pearson(xa, xb))
    if not rhos:
        raise PhotoscoreError(
            f"insufficient overlap: no rater pair shares >= {min_common} images")
    arr = np.asarray(rhos)
    stderr = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else 0.0
    return float(arr.mean()), stderr, len(arr)


def write_labels_csv(scores, labels, path):
    """Write the labels CSV: image_id,mean_z,std_z,n_raters,label."""
    lines = ["image_id,mean_z,std_z,n_raters,label"]
    for score, label in zip(scores, labels):
        lines.append(f"{score.image_id},{score.mean_z:.6g},{score.std_z:.6g},"
                     f"{score.n_raters},{int(label)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_labels_csv(path) -> dict[str, QualityLabel]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("image_id,"):
        raise PhotoscoreError(f"not a labels CSV: {path}")
    out = {}
    for line in lines[1:]:
        cells = line.split(",")
        out[cells[0]] = QualityLabel(int(cells[-1]))
    return out
