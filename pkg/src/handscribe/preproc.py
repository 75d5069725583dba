"""Image transforms applied to pages and word crops ahead of detection
and recognition: page resizing, high-contrast conversion of word crops,
slant/slope removal, canvas fitting, normalization and training-time
augmentation.

All images are 8-bit single-channel rasters where 0 is black ink and 255
is white background. Every operation is pure: it returns new images and
never mutates its input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import BadImageError, IoFailure, NoInkError

PAGE_MAX_WIDTH = 1280
PAGE_MAX_HEIGHT = 720

# Candidate shear factors for slant removal, scanned smallest-|a| first so
# score ties resolve toward the least aggressive correction.
SHEAR_GRID = tuple(round(a * 0.2, 1) for a in range(-5, 6))

MAX_SLOPE_DEGREES = 10.0


@dataclass
class GrayImage:
    """Single-channel 8-bit image, row-major, 0 = ink and 255 = background."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ValueError(f"expected a non-empty 2-D array, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {px.dtype}")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True)
class CanvasSpec:
    """Target canvas for recognizer inputs."""

    width: int = 128
    height: int = 32
    fill: int = 255

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("canvas dimensions must be >= 1")
        if not 0 <= self.fill <= 255:
            raise ValueError("fill must be an 8-bit intensity")


@dataclass(frozen=True)
class AugmentConfig:
    """Randomized word-image augmentation: width stretch, paste shift, noise."""

    stretch_range: tuple[float, float] = (0.75, 1.25)
    max_shift: int = 3
    noise_sigma: float = 10.0
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.stretch_range
        if not (0 < lo <= hi):
            raise ValueError("stretch_range must satisfy 0 < low <= high")
        if self.max_shift < 0:
            raise ValueError("max_shift must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def decode_image(data: bytes) -> GrayImage:
    """Decode PNG or JPEG bytes to grayscale.

    Color inputs are converted with luma = 0.299 R + 0.587 G + 0.114 B,
    rounded to the nearest integer.
    """
    buf = np.frombuffer(data, dtype=np.uint8)
    raw = cv2.imdecode(buf, cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise BadImageError("could not decode image bytes")
    if raw.dtype == np.uint16:
        raw = (raw // 257).astype(np.uint8)
    if raw.ndim == 2:
        return GrayImage(raw.astype(np.uint8))
    b, g, r = raw[..., 0], raw[..., 1], raw[..., 2]  # cv2 decodes as BGR(A)
    luma = 0.299 * r.astype(np.float64) + 0.587 * g.astype(np.float64) + 0.114 * b.astype(np.float64)
    return GrayImage(np.rint(luma).astype(np.uint8))


def load_image(path) -> GrayImage:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read image {path}: {exc}") from exc
    return decode_image(data)


def encode_png(img: GrayImage) -> bytes:
    ok, buf = cv2.imencode(".png", img.pixels)
    if not ok:
        raise IoFailure("PNG encoding failed")
    return buf.tobytes()


def save_png(img: GrayImage, path) -> None:
    data = encode_png(img)
    try:
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise IoFailure(f"cannot write image {path}: {exc}") from exc


def _scaled_dims(w: int, h: int, scale: float) -> tuple[int, int]:
    # Truncate, guard against float fuzz just below an integer, clamp to 1 px.
    nw = max(1, int(w * scale + 1e-9))
    nh = max(1, int(h * scale + 1e-9))
    return nw, nh


def resize_page(img: GrayImage) -> tuple[GrayImage, float]:
    """Fit a page within 1280x720 preserving aspect ratio.

    Returns the resized page and the scale factor s = min(1280/w, 720/h),
    applied whether up- or down-scaling; box coordinates on the resized
    page divide by s to map back to the source.
    """
    scale = min(PAGE_MAX_WIDTH / img.width, PAGE_MAX_HEIGHT / img.height)
    nw, nh = _scaled_dims(img.width, img.height, scale)
    if (nw, nh) == (img.width, img.height):
        return GrayImage(img.pixels.copy()), scale
    resized = cv2.resize(img.pixels, (nw, nh), interpolation=cv2.INTER_LINEAR)
    return GrayImage(resized), scale


def otsu_threshold(pixels: np.ndarray) -> float | None:
    """Otsu's threshold maximizing between-class variance, where the ink
    class is `x < T`. Ties resolve to the midpoint of the maximizing range
    so clean bimodal images split between the modes. None when no split
    exists (uniform image)."""
    hist = np.bincount(pixels.ravel(), minlength=256).astype(np.float64)
    total = hist.sum()
    w0 = np.cumsum(hist)[:-1]  # pixels < T for T = 1..255
    w1 = total - w0
    cum_mean = np.cumsum(hist * np.arange(256))[:-1]
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return None
    mu0 = np.where(valid, cum_mean / np.where(w0 > 0, w0, 1), 0.0)
    mu1 = np.where(valid, (cum_mean[-1] + hist[255] * 255 - cum_mean) / np.where(w1 > 0, w1, 1), 0.0)
    score = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, -1.0)
    best = score.max()
    ties = np.flatnonzero(score >= best - 1e-9 * max(best, 1.0))
    return float((ties[0] + ties[-1]) / 2.0 + 1.0)  # +1: index i scores T = i+1


def _otsu_ink_mask(pixels: np.ndarray) -> np.ndarray:
    """Boolean mask of ink pixels (intensity strictly below the Otsu threshold)."""
    thresh = otsu_threshold(pixels)
    if thresh is None:
        return np.zeros(pixels.shape, dtype=bool)
    return pixels < thresh


def to_iam_style(img: GrayImage) -> GrayImage:
    """Convert a word crop to the high-contrast, tightly cropped, bold style
    of scanner-quality training data.

    Three steps: full-range min-max contrast stretch, tight crop around the
    ink bounding box with a 2-pixel margin, and one 3x3 minimum-filter pass
    that thickens strokes.
    """
    px = img.pixels
    mn = int(px.min())
    mx = int(px.max())
    if mn == mx:
        raise NoInkError("uniform image, nothing to convert")
    stretched = np.rint((px.astype(np.float64) - mn) * (255.0 / (mx - mn))).astype(np.uint8)

    ink = _otsu_ink_mask(stretched)
    if not ink.any():
        raise NoInkError("no pixel below the Otsu threshold")
    rows = np.flatnonzero(ink.any(axis=1))
    cols = np.flatnonzero(ink.any(axis=0))
    y0 = max(0, rows[0] - 2)
    y1 = min(stretched.shape[0], rows[-1] + 3)
    x0 = max(0, cols[0] - 2)
    x1 = min(stretched.shape[1], cols[-1] + 3)
    cropped = stretched[y0:y1, x0:x1]

    bold = cv2.erode(cropped, np.ones((3, 3), np.uint8))  # local min: dark ink expands
    return GrayImage(bold)


def _shear_matrix(alpha: float, height: int) -> tuple[np.ndarray, int]:
    """Forward affine for x' = x + alpha * (y_bottom - y), plus output width pad."""
    y_bottom = height - 1
    shift = max(0.0, -alpha * y_bottom)
    m = np.array([[1.0, -alpha, alpha * y_bottom + shift], [0.0, 1.0, 0.0]])
    pad = int(math.ceil(abs(alpha) * y_bottom))
    return m, pad


def _shear_score(mask: np.ndarray) -> float:
    """Sum of squared run lengths over columns whose ink forms one contiguous run."""
    counts = mask.sum(axis=0)
    occupied = counts > 0
    if not occupied.any():
        return 0.0
    first = mask.argmax(axis=0)
    last = mask.shape[0] - 1 - mask[::-1].argmax(axis=0)
    contiguous = occupied & (last - first + 1 == counts)
    return float((counts[contiguous].astype(np.float64) ** 2).sum())


def _remove_slope(img: GrayImage, ink: np.ndarray) -> tuple[GrayImage, np.ndarray]:
    """Rotate so the least-squares baseline through per-column lowest ink
    pixels becomes horizontal; rotation clamped to +/-10 degrees."""
    cols = np.flatnonzero(ink.any(axis=0))
    if len(cols) < 2:
        return img, ink
    h = img.height
    lowest = (h - 1) - ink[::-1, cols].argmax(axis=0)
    slope = np.polyfit(cols.astype(np.float64), lowest.astype(np.float64), 1)[0]
    angle = math.degrees(math.atan(slope))
    # A fit far past the clamp means the lowest-pixel profile is not a
    # baseline (e.g. one slanted stroke); rotating by the clamp would only
    # distort, so slope correction is skipped entirely.
    if abs(angle) < 0.25 or abs(angle) > MAX_SLOPE_DEGREES:
        return img, ink
    center = (img.width / 2.0, img.height / 2.0)
    rot = cv2.getRotationMatrix2D(center, angle, 1.0)
    leveled = cv2.warpAffine(
        img.pixels, rot, (img.width, img.height),
        flags=cv2.INTER_LINEAR, borderMode=cv2.BORDER_CONSTANT, borderValue=255,
    )
    return GrayImage(leveled), _otsu_ink_mask(leveled)


def deslant(img: GrayImage) -> tuple[GrayImage, float]:
    """Remove slope and slant from a word image.

    Slope first: rotate by the fitted baseline angle. Then each candidate
    shear in SHEAR_GRID is scored by how well sheared columns form single
    contiguous ink runs; the argmax shear is applied to the image with
    white fill. Returns the corrected image and the chosen shear factor.
    """
    ink = _otsu_ink_mask(img.pixels)
    if not ink.any():
        return img, 0.0

    img, ink = _remove_slope(img, ink)
    h, w = ink.shape

    best_alpha = 0.0
    best_score = -1.0
    for alpha in sorted(SHEAR_GRID, key=lambda a: (abs(a), a)):
        m, pad = _shear_matrix(alpha, h)
        sheared = cv2.warpAffine(
            ink.astype(np.uint8), m, (w + pad, h), flags=cv2.INTER_NEAREST,
            borderMode=cv2.BORDER_CONSTANT, borderValue=0,
        ).astype(bool)
        score = _shear_score(sheared)
        if score > best_score:
            best_score = score
            best_alpha = alpha

    if best_alpha == 0.0:
        return img, 0.0
    m, pad = _shear_matrix(best_alpha, h)
    out = cv2.warpAffine(
        img.pixels, m, (w + pad, h), flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT, borderValue=255,
    )
    return GrayImage(out), best_alpha


def fit_to_canvas(img: GrayImage, spec: CanvasSpec = CanvasSpec()) -> GrayImage:
    """Scale into the canvas preserving aspect ratio and paste at top-left.

    The output is always exactly spec.width x spec.height; the remainder is
    filled with spec.fill.
    """
    scale = min(spec.width / img.width, spec.height / img.height)
    nw, nh = _scaled_dims(img.width, img.height, scale)
    if (nw, nh) == (img.width, img.height):
        scaled = img.pixels
    else:
        scaled = cv2.resize(img.pixels, (nw, nh), interpolation=cv2.INTER_LINEAR)
    canvas = np.full((spec.height, spec.width), spec.fill, dtype=np.uint8)
    canvas[:nh, :nw] = scaled
    return GrayImage(canvas)


def normalize(img: GrayImage) -> np.ndarray:
    """Standardize to zero mean and unit variance.

    Returns a width x height float32 array (transposed so axis 0 is the
    recognizer's timestep axis). A constant image maps to all zeros.
    """
    arr = img.pixels.astype(np.float64)
    std = arr.std()
    if std == 0.0:
        out = np.zeros_like(arr)
    else:
        out = (arr - arr.mean()) / std
    return out.T.astype(np.float32)


def augment(img: GrayImage, cfg: AugmentConfig, spec: CanvasSpec = CanvasSpec()) -> GrayImage:
    """Randomized training-time variant of fit_to_canvas.

    Width is rescaled by a stretch factor drawn from cfg.stretch_range, the
    paste anchor is shifted by up to cfg.max_shift pixels (content sliding
    past the canvas edge is cropped), and Gaussian noise of cfg.noise_sigma
    is added. Deterministic for a fixed config: the RNG is seeded per call.
    """
    rng = np.random.default_rng(cfg.seed)
    stretch = float(rng.uniform(cfg.stretch_range[0], cfg.stretch_range[1]))
    dx = int(rng.integers(0, cfg.max_shift + 1))
    dy = int(rng.integers(0, cfg.max_shift + 1))

    px = img.pixels
    new_w = max(1, int(round(img.width * stretch)))
    if new_w != img.width:
        px = cv2.resize(px, (new_w, img.height), interpolation=cv2.INTER_LINEAR)

    scale = min(spec.width / new_w, spec.height / img.height)
    nw, nh = _scaled_dims(new_w, img.height, scale)
    if (nw, nh) != (new_w, img.height):
        px = cv2.resize(px, (nw, nh), interpolation=cv2.INTER_LINEAR)

    canvas = np.full((spec.height, spec.width), spec.fill, dtype=np.uint8)
    paste_w = min(nw, spec.width - dx)
    paste_h = min(nh, spec.height - dy)
    if paste_w > 0 and paste_h > 0:
        canvas[dy:dy + paste_h, dx:dx + paste_w] = px[:paste_h, :paste_w]

    if cfg.noise_sigma > 0:
        noisy = canvas.astype(np.float64) + rng.normal(0.0, cfg.noise_sigma, canvas.shape)
        canvas = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    return GrayImage(canvas)


def damaged_placeholder(spec: CanvasSpec = CanvasSpec()) -> GrayImage:
    """All-black stand-in used in place of unreadable source files."""
    return GrayImage(np.zeros((spec.height, spec.width), dtype=np.uint8))
