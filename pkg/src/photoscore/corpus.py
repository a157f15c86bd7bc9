"""Listing corpus data model: manifest ingestion, image decoding, feature
persistence, and a synthetic corpus generator.

The manifest is JSON-lines, one image record per line:

    {"image_id": str, "path": str, "category": "shoe"|"handbag",
     "detections": [{"left": int, "top": int, "right": int, "bottom": int}],
     "ratings": [{"rater_id": str, "score": int}],
     "listing": {"listing_id": str, "days": int, "views": int,
                 "price": float, "sold": bool, "aesthetic": float|null}}

`detections`, `ratings` and `listing` are each optional. Relative image
paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage

from .errors import ManifestError, PhotoscoreError

CATEGORIES = ("shoe", "handbag")

# Fixed column order of the feature CSV.
FEATURE_COLUMNS = [
    "image_id", "width", "height", "resolution", "brightness", "contrast",
    "dynamic_range", "object_cnt", "has_detection", "top_space",
    "bottom_space", "left_space", "right_space", "x_asymmetry", "y_asymmetry",
    "fgbg_area_ratio", "bgfg_brightness_diff", "bgfg_contrast_diff",
    "bg_lightness", "bg_nonuniformity", "label",
]

# The seven object-feature columns left empty when nothing was detected.
OBJECT_COLUMNS = [
    "object_cnt", "top_space", "bottom_space", "left_space", "right_space",
    "x_asymmetry", "y_asymmetry",
]


@dataclass
class Image:
    """An RGB raster with channels normalized to [0, 1], row-major."""

    pixels: np.ndarray  # shape (height, width, 3), float64

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"pixels must be (h, w, 3), got {px.shape}")
        if px.min() < 0.0 or px.max() > 1.0:
            raise ValueError("channel values must lie in [0, 1]")
        self.pixels = px

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]


@dataclass(frozen=True)
class BoundingBox:
    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if not (self.left < self.right and self.top < self.bottom):
            raise ValueError(
                f"degenerate box ({self.left},{self.top},{self.right},{self.bottom})"
            )
        if self.left < 0 or self.top < 0:
            raise ValueError("box coordinates must be non-negative")

    @property
    def box_width(self):
        return self.right - self.left

    @property
    def box_height(self):
        return self.bottom - self.top

    @property
    def area(self):
        return self.box_width * self.box_height

    def fits(self, width, height):
        return self.right <= width and self.bottom <= height


@dataclass(frozen=True)
class RatingRecord:
    image_id: str
    rater_id: str
    raw_score: int

    def __post_init__(self):
        if self.raw_score not in (1, 2, 3, 4, 5):
            raise ValueError(f"raw_score {self.raw_score} outside [1, 5]")


@dataclass
class ListingMeta:
    listing_id: str
    days_listed: int
    view_count: int
    price: float
    sold: bool
    aesthetic_score: float | None = None
    quality_score: float | None = None

    def __post_init__(self):
        if self.days_listed < 0 or self.view_count < 0:
            raise ValueError("counts must be non-negative")
        if not self.price > 0:
            raise ValueError(f"price must be positive, got {self.price}")


@dataclass
class ImageRecord:
    image_id: str
    source: str | Image  # file path or in-memory raster
    category: str
    detections: list[BoundingBox] = field(default_factory=list)
    ratings: list[RatingRecord] = field(default_factory=list)
    listing: ListingMeta | None = None


@dataclass
class SyntheticTruth:
    """Ground truth kept alongside a synthetic corpus for oracle tests."""

    masks: dict[str, np.ndarray] = field(default_factory=dict)  # bool (h, w)
    latent_quality: dict[str, float] = field(default_factory=dict)
    ambiguous: dict[str, bool] = field(default_factory=dict)


@dataclass
class ListingCorpus:
    images: dict[str, ImageRecord] = field(default_factory=dict)
    truth: SyntheticTruth | None = None

    @property
    def listings(self):
        return [r.listing for r in self.images.values() if r.listing is not None]

    def image_ids(self):
        return sorted(self.images)


def decode_image(data: bytes) -> Image:
    """Decode a PNG or JPEG payload into a normalized RGB Image.

    Grayscale and paletted sources are expanded to RGB; alpha is composited
    over white. 8-bit channel value v maps to v / 255.
    """
    try:
        im = PILImage.open(io.BytesIO(data))
        im.load()
    except Exception as exc:
        raise PhotoscoreError(f"cannot decode image: {exc}") from exc
    if im.mode == "P" and "transparency" in im.info:
        im = im.convert("RGBA")
    if im.mode in ("RGBA", "LA"):
        background = PILImage.new("RGB", im.size, (255, 255, 255))
        background.paste(im, mask=im.getchannel("A"))
        im = background
    elif im.mode != "RGB":
        im = im.convert("RGB")
    arr = np.asarray(im, dtype=np.float64) / 255.0
    return Image(arr)


def load_image(record: ImageRecord) -> Image:
    """Return the decoded raster for a record, reading from disk if needed."""
    if isinstance(record.source, Image):
        return record.source
    try:
        with open(record.source, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise PhotoscoreError(f"cannot read image {record.source!r}: {exc}") from exc
    return decode_image(data)


def _image_dimensions(path):
    """Read (width, height) from an image header without full decode."""
    try:
        with PILImage.open(path) as im:
            return im.size
    except Exception:
        return None


def _parse_box(obj, where):
    try:
        return BoundingBox(int(obj["left"]), int(obj["top"]),
                           int(obj["right"]), int(obj["bottom"]))
    except KeyError as exc:
        raise ValueError(f"{where}: missing box field {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{where}: {exc}") from exc


def load_manifest(path) -> ListingCorpus:
    """Load and validate a JSONL manifest into a ListingCorpus.

    All records are validated; any invalid line fails the load with an
    error naming the line number and offending field. Bounding boxes are
    checked against image headers when the image file is present.
    """
    if not os.path.isfile(path):
        raise ManifestError(f"manifest not found: {path}")
    base_dir = os.path.dirname(os.path.abspath(path))
    corpus = ListingCorpus()
    problems = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = _parse_manifest_line(line, base_dir)
            except ValueError as exc:
                problems.append(f"line {lineno}: {exc}")
                continue
            if record.image_id in corpus.images:
                problems.append(f"line {lineno}: duplicate image_id {record.image_id!r}")
                continue
            corpus.images[record.image_id] = record
    if problems:
        raise ManifestError("invalid manifest records:\n  " + "\n  ".join(problems))
    return corpus


def _parse_manifest_line(line, base_dir):
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    try:
        image_id = str(obj["image_id"])
        path = str(obj["path"])
    except KeyError as exc:
        raise ValueError(f"missing field {exc}") from exc
    category = str(obj.get("category", CATEGORIES[0]))
    if category not in CATEGORIES:
        raise ValueError(f"category: unknown category {category!r}")
    if not os.path.isabs(path):
        path = os.path.join(base_dir, path)

    detections = []
    for i, det in enumerate(obj.get("detections") or []):
        detections.append(_parse_box(det, f"detections[{i}]"))
    dims = _image_dimensions(path)
    if dims is not None:
        w, h = dims
        for i, box in enumerate(detections):
            if not box.fits(w, h):
                raise ValueError(
                    f"detections[{i}]: box ({box.left},{box.top},{box.right},"
                    f"{box.bottom}) outside {w}x{h} image"
                )

    ratings = []
    for i, rat in enumerate(obj.get("ratings") or []):
        try:
            ratings.append(RatingRecord(image_id, str(rat["rater_id"]),
                                        int(rat["score"])))
        except KeyError as exc:
            raise ValueError(f"ratings[{i}]: missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ValueError(f"ratings[{i}].score: {exc}") from exc

    listing = None
    if obj.get("listing") is not None:
        lst = obj["listing"]
        try:
            aesthetic = lst.get("aesthetic")
            listing = ListingMeta(
                listing_id=str(lst["listing_id"]),
                days_listed=int(lst["days"]),
                view_count=int(lst["views"]),
                price=float(lst["price"]),
                sold=bool(lst["sold"]),
                aesthetic_score=None if aesthetic is None else float(aesthetic),
            )
        except KeyError as exc:
            raise ValueError(f"listing: missing field {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ValueError(f"listing: {exc}") from exc

    return ImageRecord(image_id=image_id, source=path, category=category,
                       detections=detections, ratings=ratings, listing=listing)


def write_manifest(corpus: ListingCorpus, path):
    """Write a corpus back to JSONL. Records must reference image files."""
    lines = []
    for image_id in corpus.image_ids():
        rec = corpus.images[image_id]
        if isinstance(rec.source, Image):
            raise PhotoscoreError(
                f"image {image_id!r} has no file path; materialize the corpus first"
            )
        obj = {"image_id": rec.image_id, "path": rec.source, "category": rec.category}
        if rec.detections:
            obj["detections"] = [
                {"left": b.left, "top": b.top, "right": b.right, "bottom": b.bottom}
                for b in rec.detections
            ]
        if rec.ratings:
            obj["ratings"] = [
                {"rater_id": r.rater_id, "score": r.raw_score} for r in rec.ratings
            ]
        if rec.listing is not None:
            lst = rec.listing
            obj["listing"] = {
                "listing_id": lst.listing_id, "days": lst.days_listed,
                "views": lst.view_count, "price": lst.price, "sold": lst.sold,
                "aesthetic": lst.aesthetic_score,
            }
        lines.append(json.dumps(obj))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def save_image_png(img: Image, path):
    arr = np.rint(img.pixels * 255.0).astype(np.uint8)
    PILImage.fromarray(arr, mode="RGB").save(path, format="PNG")


def materialize(corpus: ListingCorpus, out_dir) -> str:
    """Write in-memory rasters as PNGs plus a manifest under `out_dir`.

    Returns the manifest path. Ground-truth masks (if present) are written
    to `out_dir/masks/` as 8-bit PNGs (0 = background, 255 = foreground).
    """
    image_dir = os.path.join(out_dir, "images")
    os.makedirs(image_dir, exist_ok=True)
    for image_id in corpus.image_ids():
        rec = corpus.images[image_id]
        if isinstance(rec.source, Image):
            rel = os.path.join("images", f"{image_id}.png")
            save_image_png(rec.source, os.path.join(out_dir, rel))
            rec.source = rel
    if corpus.truth is not None and corpus.truth.masks:
        mask_dir = os.path.join(out_dir, "masks")
        os.makedirs(mask_dir, exist_ok=True)
        for image_id in sorted(corpus.truth.masks):
            arr = corpus.truth.masks[image_id].astype(np.uint8) * 255
            PILImage.fromarray(arr, mode="L").save(
                os.path.join(mask_dir, f"{image_id}.png"), format="PNG")
    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    write_manifest(corpus, manifest_path)
    return manifest_path


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------

@dataclass
class SynthSpec:
    """Parameters of the synthetic listing generator.

    Rater model: each rater has an integer bias in {-1, 0, 1} (integer so
    that score discretization commutes across raters) and shared Gaussian
    noise `rater_noise_sd`; a fraction of images is "ambiguous" and gets
    `ambiguous_noise_sd` extra rating noise, which is what the
    disagreement filter is meant to remove.

    Sales model: P(sold) = sigmoid(c0 + c1*log1p(days) + c2*log1p(views)
    + c3*log(price) + c4*latent_quality) with `sales_coefficients`
    = (c0, c1, c2, c3, c4).
    """

    n_images: int = 50
    width: int = 64
    height: int = 64
    category: str = "shoe"
    n_raters: int = 8
    raters_per_image: int = 3
    rater_bias_sd: float = 0.8
    rater_noise_sd: float = 0.3
    ambiguous_fraction: float = 0.4
    ambiguous_noise_sd: float = 2.0
    p_no_detection: float = 0.0
    p_two_objects: float = 0.0
    sales_coefficients: tuple = (-1.0, 0.25, 1.0, -0.55, 0.8)

    def __post_init__(self):
        if self.n_images <= 0:
            raise ValueError("n_images must be positive")
        if self.width <= 7 or self.height <= 7:
            raise ValueError("canvas must be at least 8x8")
        if self.n_raters < 1 or not (1 <= self.raters_per_image <= self.n_raters):
            raise ValueError("invalid rater counts")


def _draw_shape(rng, canvas, lo_frac=0.25, hi_frac=0.6):
    """Place a filled ellipse or rectangle; returns (bool mask, BoundingBox)."""
    h, w = canvas
    bw_hi = min(max(4, int(w * hi_frac)), w - 4)
    bh_hi = min(max(4, int(h * hi_frac)), h - 4)
    bw_lo = min(max(3, int(w * lo_frac)), bw_hi)
    bh_lo = min(max(3, int(h * lo_frac)), bh_hi)
    bw = int(rng.integers(bw_lo, bw_hi + 1))
    bh = int(rng.integers(bh_lo, bh_hi + 1))
    left = int(rng.integers(2, w - bw - 1))
    top = int(rng.integers(2, h - bh - 1))
    box = BoundingBox(left, top, left + bw, top + bh)
    mask = np.zeros((h, w), dtype=bool)
    if rng.random() < 0.5:
        mask[top:top + bh, left:left + bw] = True
    else:
        yy, xx = np.mgrid[0:h, 0:w]
        cy, cx = top + bh / 2.0, left + bw / 2.0
        mask[((xx - cx + 0.5) / (bw / 2.0)) ** 2
             + ((yy - cy + 0.5) / (bh / 2.0)) ** 2 <= 1.0] = True
        mask[:top, :] = False
        mask[top + bh:, :] = False
        mask[:, :left] = False
        mask[:, left + bw:] = False
    return mask, box


def generate_synthetic_corpus(spec: SynthSpec, seed: int) -> ListingCorpus:
    """Deterministically generate a corpus with known ground truth.

    Each image gets a known foreground mask and box, a latent quality
    driving both its photometry (brighter, more uniform backgrounds for
    higher quality) and its crowd ratings, and a listing whose sold flag
    is drawn from the spec's logistic sales model.
    """
    rng = np.random.default_rng(seed)
    corpus = ListingCorpus(truth=SyntheticTruth())
    h, w = spec.height, spec.width
    rater_ids = [f"r{j:03d}" for j in range(spec.n_raters)]
    biases = np.clip(np.rint(rng.normal(0.0, spec.rater_bias_sd, spec.n_raters)),
                     -1, 1).astype(int)
    c = spec.sales_coefficients

    for i in range(spec.n_images):
        image_id = f"img{i:05d}"
        q = float(np.clip(rng.normal(0.0, 0.8), -1.0, 1.0))
        ambiguous = bool(rng.random() < spec.ambiguous_fraction)

        # Background: lightness tracks quality, noise tracks (1 - quality).
        bg_level = float(np.clip(0.55 + 0.30 * q, 0.08, 0.97))
        bg_noise = 0.01 + 0.05 * (1.0 - q) / 2.0
        tint = rng.uniform(-0.03, 0.03, size=3)
        pixels = np.clip(
            bg_level + tint + rng.normal(0.0, bg_noise, size=(h, w, 3)),
            0.0, 1.0)

        shape_mask, box = _draw_shape(rng, (h, w))
        boxes = [box]
        if rng.random() < spec.p_two_objects:
            extra_mask, extra_box = _draw_shape(rng, (h, w), 0.12, 0.3)
            shape_mask |= extra_mask
            boxes.append(extra_box)
        bg_rgb = np.full(3, bg_level) + tint
        for _ in range(20):
            fg_rgb = rng.uniform(0.05, 0.95, size=3)
            if np.linalg.norm(fg_rgb - bg_rgb) >= 0.35:
                break
        pixels[shape_mask] = np.clip(
            fg_rgb + rng.normal(0.0, 0.015, size=(int(shape_mask.sum()), 3)),
            0.0, 1.0)

        detections = [] if rng.random() < spec.p_no_detection else boxes

        raters = rng.choice(spec.n_raters, size=spec.raters_per_image,
                            replace=False)
        noise_sd = spec.rater_noise_sd + (spec.ambiguous_noise_sd if ambiguous else 0.0)
        ratings = []
        for j in sorted(int(r) for r in raters):
            eps = rng.normal(0.0, noise_sd) if noise_sd > 0 else 0.0
            raw = int(np.clip(np.rint(3.0 + biases[j] + q + eps), 1, 5))
            ratings.append(RatingRecord(image_id, rater_ids[j], raw))

        days = int(rng.integers(0, 90))
        views = int(rng.poisson(25))
        price = float(np.round(np.exp(rng.normal(3.0, 0.5)), 2))
        logit = (c[0] + c[1] * math.log1p(days) + c[2] * math.log1p(views)
                 + c[3] * math.log(price) + c[4] * q)
        sold = bool(rng.random() < 1.0 / (1.0 + math.exp(-logit)))
        listing = ListingMeta(
            listing_id=f"L{i:05d}", days_listed=days, view_count=views,
            price=price, sold=sold,
            aesthetic_score=float(0.5 * q + rng.normal(0.0, 0.7)),
            quality_score=q,
        )

        corpus.images[image_id] = ImageRecord(
            image_id=image_id, source=Image(pixels), category=spec.category,
            detections=detections, ratings=ratings, listing=listing)
        corpus.truth.masks[image_id] = shape_mask
        corpus.truth.latent_quality[image_id] = q
        corpus.truth.ambiguous[image_id] = ambiguous
    return corpus


# ---------------------------------------------------------------------------
# Feature table (CSV) persistence
# ---------------------------------------------------------------------------

@dataclass
class FeatureVector:
    """The 18 photo features for one image plus the detection flag.

    Object features are None when nothing was detected; regional features
    are None when segmentation was skipped or degenerate.
    """

    width: int
    height: int
    resolution: float
    brightness: float
    contrast: float
    dynamic_range: float
    object_cnt: int = 0
    has_detection: bool = False
    top_space: float | None = None
    bottom_space: float | None = None
    left_space: float | None = None
    right_space: float | None = None
    x_asymmetry: float | None = None
    y_asymmetry: float | None = None
    fgbg_area_ratio: float | None = None
    bgfg_brightness_diff: float | None = None
    bgfg_contrast_diff: float | None = None
    bg_lightness: float | None = None
    bg_nonuniformity: float | None = None


def _format_value(name, value):
    if value is None:
        return ""
    if name in ("width", "height", "object_cnt"):
        return str(int(value))
    if name == "has_detection":
        return "1" if value else "0"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return f"{float(value):.6g}"


def write_feature_table(records, path):
    """Write (image_id, FeatureVector, label|None) records as CSV.

    Column order is fixed by FEATURE_COLUMNS; reals carry 6 significant
    digits; the seven object-feature cells are empty when has_detection
    is false, as are any absent regional features.
    """
    if not records:
        raise PhotoscoreError("no feature records to write")
    lines = [",".join(FEATURE_COLUMNS)]
    for image_id, fv, label in records:
        row = [str(image_id)]
        for name in FEATURE_COLUMNS[1:-1]:
            value = getattr(fv, name)
            if name in OBJECT_COLUMNS and not fv.has_detection:
                row.append("")
            else:
                row.append(_format_value(name, value))
        row.append("" if label is None else str(int(label)))
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_feature_table(path):
    """Read a feature CSV back into (image_id, FeatureVector, label|None)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise PhotoscoreError(f"empty feature table: {path}")
    header = lines[0].split(",")
    if header != FEATURE_COLUMNS:
        raise PhotoscoreError(f"unexpected feature CSV header in {path}")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(FEATURE_COLUMNS):
            raise PhotoscoreError(f"{path}:{lineno}: wrong column count")
        values = dict(zip(FEATURE_COLUMNS, cells))
        has_detection = values["has_detection"] == "1"
        kwargs = {
            "width": int(values["width"]),
            "height": int(values["height"]),
            "resolution": float(values["resolution"]),
            "brightness": float(values["brightness"]),
            "contrast": float(values["contrast"]),
            "dynamic_range": float(values["dynamic_range"]),
            "has_detection": has_detection,
            "object_cnt": int(values["object_cnt"]) if values["object_cnt"] else 0,
        }
        for name in FEATURE_COLUMNS[9:-1]:
            kwargs[name] = float(values[name]) if values[name] else None
        label = int(values["label"]) if values["label"] else None
        records.append((values["image_id"], FeatureVector(**kwargs), label))
    return records
