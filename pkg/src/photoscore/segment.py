"""GrabCut foreground segmentation seeded by a bounding box, plus the
regional photo features computed from the resulting mask.

The segmentation alternates (1) refitting one Gaussian mixture per region
(initialized once by seeded k-means, then by maximum-likelihood component
reassignment), (2) building a graph whose terminal capacities are the
mixtures' negative log-likelihoods and whose neighbor capacities are
gamma * exp(-beta * ||z_m - z_n||^2) over 8-connected pairs, and (3) an
exact s-t min cut. Pixels outside the seed box are hard background
throughout. Iteration stops when the changed-pixel fraction falls below
the configured threshold, on the iteration cap, or as a safeguard when a
step fails to lower the energy (the previous labeling is kept), so the
recorded energy trace is non-increasing.

The min cut itself is delegated to scipy's maximum_flow on an integer
capacity graph (capacities quantized at 1e-6); everything surrounding it
(models, energy, graph layout) lives here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from PIL import Image as PILImage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .corpus import BoundingBox, Image
from .errors import SegmentationError
from .photometry import michelson_contrast, to_grayscale

CAPACITY_SCALE = 1_000_000  # float -> integer capacity quantization
# scipy's max-flow works on int32 capacities; cap the (already astronomically
# confident) data terms so every scaled capacity stays below 2**31
DATA_TERM_CAP = 1500.0

# 8-neighborhood as (dy, dx); first four are the canonical directions that
# enumerate every unordered pair exactly once.
_CANONICAL = ((0, 1), (1, 0), (1, 1), (1, -1))
_ALL_DIRECTIONS = _CANONICAL + ((0, -1), (-1, 0), (-1, -1), (-1, 1))


@dataclass
class GrabCutParams:
    gmm_components: int = 5
    gamma: float = 50.0
    max_iterations: int = 5
    convergence_fraction: float = 0.001
    seed: int = 0

    def __post_init__(self):
        if self.gmm_components < 1:
            raise ValueError("gmm_components must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class Mask:
    """Per-pixel foreground flags; True = foreground."""

    foreground: np.ndarray  # bool (h, w)
    energy_trace: list = field(default_factory=list)

    @property
    def width(self):
        return self.foreground.shape[1]

    @property
    def height(self):
        return self.foreground.shape[0]


@dataclass(frozen=True)
class RegionalFeatures:
    fgbg_area_ratio: float
    bgfg_brightness_diff: float | None
    bgfg_contrast_diff: float | None
    bg_lightness: float | None
    bg_nonuniformity: float | None


def _kmeans(X, k, rng, iterations=30):
    """Plain seeded k-means; argmin breaks ties toward the lowest index."""
    n = X.shape[0]
    k = min(k, n)
    centers = X[rng.choice(n, size=k, replace=False)]
    labels = None
    for _ in range(iterations):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = X[labels == j]
            if members.shape[0]:
                centers[j] = members.mean(axis=0)
    return labels, k


class _ColorMixture:
    """Full-covariance GMM over RGB, fit from a hard partition."""

    COV_REG = 1e-6
    LOG_2PI = float(np.log(2.0 * np.pi))

    def __init__(self, k):
        self.k = k
        self.weights = np.zeros(k)
        self.means = np.zeros((k, 3))
        self.inv_covs = np.tile(np.eye(3), (k, 1, 1))
        self.log_dets = np.zeros(k)

    def fit(self, X, labels):
        n = X.shape[0]
        for j in range(self.k):
            members = X[labels == j]
            self.weights[j] = members.shape[0] / n
            if members.shape[0] == 0:
                continue
            self.means[j] = members.mean(axis=0)
            diff = members - self.means[j]
            cov = (diff.T @ diff) / members.shape[0] + self.COV_REG * np.eye(3)
            self.inv_covs[j] = np.linalg.inv(cov)
            self.log_dets[j] = np.linalg.slogdet(cov)[1]
        return self

    def component_costs(self, X):
        """-log(pi_k * N(z; mu_k, Sigma_k)) per pixel per component."""
        n = X.shape[0]
        costs = np.full((n, self.k), np.inf)
        for j in range(self.k):
            if self.weights[j] == 0.0:
                continue
            diff = X - self.means[j]
            quad = np.einsum("ni,ij,nj->n", diff, self.inv_covs[j], diff)
            costs[:, j] = (-np.log(self.weights[j]) + 0.5 * self.log_dets[j]
                           + 0.5 * quad + 1.5 * self.LOG_2PI)
        return costs

    def assign(self, X):
        return np.argmin(self.component_costs(X), axis=1)

    def data_term(self, X):
        return np.minimum(self.component_costs(X).min(axis=1), DATA_TERM_CAP)


def _shifted_slices(h, w, dy, dx):
    """Index slices (src, dst) so that src + (dy, dx) = dst, both in range."""
    src = (slice(max(0, -dy), h - max(0, dy)), slice(max(0, -dx), w - max(0, dx)))
    dst = (slice(max(0, dy), h + min(0, dy)), slice(max(0, dx), w + min(0, dx)))
    return src, dst


def _pairwise_weights(pixels, gamma):
    """Smoothness weights for the four canonical neighbor directions."""
    h, w, _ = pixels.shape
    sq_diffs = {}
    total, count = 0.0, 0
    for dy, dx in _CANONICAL:
        src, dst = _shifted_slices(h, w, dy, dx)
        sq = ((pixels[src] - pixels[dst]) ** 2).sum(axis=2)
        sq_diffs[(dy, dx)] = sq
        total += float(sq.sum())
        count += sq.size
    mean_sq = total / count if count else 0.0
    beta = 0.0 if mean_sq == 0.0 else 1.0 / (2.0 * mean_sq)
    weights = {d: gamma * np.exp(-beta * sq) for d, sq in sq_diffs.items()}
    return weights, beta


def _labeling_energy(alpha, d_fg, d_bg, weights, h, w):
    """Data + smoothness energy of a full-image labeling."""
    energy = float(np.where(alpha, d_fg, d_bg).sum())
    for (dy, dx), wgt in weights.items():
        src, dst = _shifted_slices(h, w, dy, dx)
        cross = alpha[src] != alpha[dst]
        energy += float(wgt[cross].sum())
    return energy


def _min_cut(node_ids, inbox, d_fg, d_bg, weights, h, w):
    """Exact min cut over in-box pixels; returns the new foreground flags."""
    m = int(inbox.sum())
    s, t = m, m + 1

    rows, cols, caps = [], [], []

    sink_extra = np.zeros((h, w))
    for dy, dx in _CANONICAL:
        src, dst = _shifted_slices(h, w, dy, dx)
        wgt = weights[(dy, dx)]
        both = inbox[src] & inbox[dst]
        u = node_ids[src][both]
        v = node_ids[dst][both]
        c = wgt[both]
        rows.extend((u, v))
        cols.extend((v, u))
        caps.extend((c, c))
    # fold smoothness toward hard-background neighbors into sink links;
    # the flipped direction reuses the canonical weight block, which already
    # aligns elementwise with the flipped source frame
    for dy, dx in _ALL_DIRECTIONS:
        wgt = weights[(dy, dx)] if (dy, dx) in weights else weights[(-dy, -dx)]
        src, dst = _shifted_slices(h, w, dy, dx)
        boundary = inbox[src] & ~inbox[dst]
        if not boundary.any():
            continue
        block = np.zeros((h, w))
        block[src] = np.where(boundary, wgt, 0.0)
        sink_extra += block

    in_idx = np.flatnonzero(inbox.ravel())
    nodes = node_ids.ravel()[in_idx]
    d_fg_in = d_fg.ravel()[in_idx]
    d_bg_in = d_bg.ravel()[in_idx]
    sink_in = sink_extra.ravel()[in_idx]

    # Tight Gaussians give negative -log likelihoods; shifting both of a
    # pixel's terminal links by the same amount changes every s-t cut by a
    # constant, so shift them to keep capacities non-negative.
    shift = np.minimum(np.minimum(d_fg_in, d_bg_in), 0.0)
    rows.append(np.full(m, s))
    cols.append(nodes)
    caps.append(d_bg_in - shift)  # severed when the pixel lands on background
    rows.append(nodes)
    cols.append(np.full(m, t))
    caps.append(d_fg_in - shift + sink_in)  # severed when the pixel stays foreground

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    caps = np.rint(np.concatenate(caps) * CAPACITY_SCALE)
    caps = np.minimum(caps, 2_000_000_000).astype(np.int32)
    graph = csr_matrix((caps, (rows, cols)), shape=(m + 2, m + 2))
    result = maximum_flow(graph, s, t)

    residual = graph - result.flow
    residual.data = (residual.data > 0).astype(np.int8)
    residual.eliminate_zeros()
    reachable = breadth_first_order(residual, s, directed=True,
                                    return_predecessors=False)
    fg_nodes = np.zeros(m + 2, dtype=bool)
    fg_nodes[reachable] = True

    alpha = np.zeros(h * w, dtype=bool)
    alpha[in_idx] = fg_nodes[nodes]
    return alpha.reshape(h, w)


def grabcut(img: Image, seed_box: BoundingBox, params: GrabCutParams | None = None) -> Mask:
    """Segment the image into foreground/background from a seed rectangle.

    Deterministic for a fixed `params.seed`; `Mask.energy_trace` holds the
    per-iteration energies (non-increasing).
    """
    if params is None:
        params = GrabCutParams()
    h, w = img.height, img.width
    if not seed_box.fits(w, h):
        raise SegmentationError(f"seed box does not fit {w}x{h} image")
    if (seed_box.left == 0 and seed_box.top == 0
            and seed_box.right == w and seed_box.bottom == h):
        raise SegmentationError("no background seed: box covers the entire image")

    pixels = img.pixels
    flat = pixels.reshape(-1, 3)
    inbox = np.zeros((h, w), dtype=bool)
    inbox[seed_box.top:seed_box.bottom, seed_box.left:seed_box.right] = True
    node_ids = np.full((h, w), -1, dtype=np.int64)
    node_ids[inbox] = np.arange(int(inbox.sum()))

    weights, _ = _pairwise_weights(pixels, params.gamma)

    rng = np.random.default_rng(params.seed)
    alpha = inbox.copy()
    k = params.gmm_components
    fg_mix = _ColorMixture(min(k, int(alpha.sum())))
    bg_mix = _ColorMixture(min(k, int((~alpha).sum())))
    fg_labels, _ = _kmeans(flat[alpha.ravel()], fg_mix.k, rng)
    bg_labels, _ = _kmeans(flat[~alpha.ravel()], bg_mix.k, rng)
    fg_mix.fit(flat[alpha.ravel()], fg_labels)
    bg_mix.fit(flat[~alpha.ravel()], bg_labels)

    energies: list = []
    for iteration in range(params.max_iterations):
        if iteration > 0:
            fg_pixels = flat[alpha.ravel()]
            bg_pixels = flat[~alpha.ravel()]
            if fg_pixels.shape[0] == 0 or bg_pixels.shape[0] == 0:
                break
            fg_mix.fit(fg_pixels, fg_mix.assign(fg_pixels))
            bg_mix.fit(bg_pixels, bg_mix.assign(bg_pixels))

        d_fg = fg_mix.data_term(flat).reshape(h, w)
        d_bg = bg_mix.data_term(flat).reshape(h, w)
        new_alpha = _min_cut(node_ids, inbox, d_fg, d_bg, weights, h, w)
        energy = _labeling_energy(new_alpha, d_fg, d_bg, weights, h, w)
        if energies and energy > energies[-1] + 1e-9:
            break  # keep the previous labeling; trace stays non-increasing
        changed = int(np.count_nonzero(new_alpha != alpha))
        alpha = new_alpha
        energies.append(energy)
        if changed / (h * w) < params.convergence_fraction:
            break

    return Mask(foreground=alpha, energy_trace=energies)


def regional_features(img: Image, mask: Mask) -> RegionalFeatures:
    """Regional photo features from a foreground/background mask.

    Degenerate regions yield absent (None) fields: an empty background
    reports an infinite area ratio with background stats absent; an empty
    foreground reports ratio 0 with the two difference features absent.
    """
    if mask.foreground.shape != img.pixels.shape[:2]:
        raise ValueError("mask dimensions do not match image")
    fg = mask.foreground
    lum = to_grayscale(img)
    n_fg = int(fg.sum())
    n_bg = fg.size - n_fg

    if n_bg == 0:
        return RegionalFeatures(
            fgbg_area_ratio=float("inf"), bgfg_brightness_diff=None,
            bgfg_contrast_diff=None, bg_lightness=None, bg_nonuniformity=None)

    bg_rgb = img.pixels[~fg]
    bg_lum = lum[~fg]
    bg_lightness = float(np.mean(
        np.linalg.norm(bg_rgb - 1.0, axis=1) / np.sqrt(3.0)))
    bg_nonuniformity = float(bg_lum.std())

    if n_fg == 0:
        return RegionalFeatures(
            fgbg_area_ratio=0.0, bgfg_brightness_diff=None,
            bgfg_contrast_diff=None, bg_lightness=bg_lightness,
            bg_nonuniformity=bg_nonuniformity)

    fg_lum = lum[fg]
    return RegionalFeatures(
        fgbg_area_ratio=n_fg / n_bg,
        bgfg_brightness_diff=float(bg_lum.mean() - fg_lum.mean()),
        bgfg_contrast_diff=michelson_contrast(bg_lum) - michelson_contrast(fg_lum),
        bg_lightness=bg_lightness,
        bg_nonuniformity=bg_nonuniformity,
    )


def save_mask_png(mask: Mask, path):
    """Write an 8-bit PNG: 0 = background, 255 = foreground."""
    arr = mask.foreground.astype(np.uint8) * 255
    PILImage.fromarray(arr, mode="L").save(path, format="PNG")


def load_mask_png(path) -> Mask:
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return Mask(foreground=arr > 127)
