"""Fundus-style image preprocessing and seeded data augmentation.

The preprocessing chain: estimate the camera's circular field of view
(FOV), rescale the image so the FOV width hits a target, subtract a
large-Gaussian background estimate per channel, amplify the residual,
zero everything outside a slightly eroded FOV (the rim carries
illumination artifacts), and center-crop to the network input size.

Augmentation draws rotation, translation, scale, horizontal flip, and a
multiplicative contrast factor from fixed ranges; with a seeded rng the
produced batches are reproducible.  The application order is contrast,
then one combined geometric warp (bilinear, zero border), then flip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import PreprocessError, ShapeError
from .tensor import Rng


@dataclass
class PreprocConfig:
    fov_width: int = 512        # FOV is rescaled to this many pixels across
    sigma: float = 8.5          # background Gaussian, in rescaled pixels
    gain: float = 4.0           # contrast amplification of (image - background)
    erosion: float = 0.05       # fraction of the FOV radius removed at the rim
    crop: int = 448             # final square side
    threshold: float = 10.0     # mean-channel intensity separating FOV from border

    def __post_init__(self):
        if min(self.fov_width, self.crop) < 8 or self.sigma <= 0 or self.gain <= 0:
            raise PreprocessError(f"invalid preprocessing config {self}")
        if not 0.0 <= self.erosion < 0.5:
            raise PreprocessError(f"erosion fraction must be in [0, 0.5), got {self.erosion}")


@dataclass
class AugmentRanges:
    rotation: tuple[float, float] = (0.0, 360.0)      # degrees
    translate: tuple[float, float] = (-10.0, 10.0)    # pixels, each axis
    scale: tuple[float, float] = (0.85, 1.15)
    contrast: tuple[float, float] = (0.60, 1.67)
    flip: bool = True


@dataclass(frozen=True)
class AugmentParams:
    rotation: float
    translate: tuple[float, float]
    scale: float
    contrast: float
    flip: bool

    @staticmethod
    def identity() -> "AugmentParams":
        return AugmentParams(0.0, (0.0, 0.0), 1.0, 1.0, False)


def estimate_fov(image: np.ndarray, threshold: float = 10.0):
    """Locate the field of view: pixels whose mean channel intensity
    exceeds the threshold, reduced to the largest connected component.

    Returns (width in pixels, boolean mask).  An all-dark image raises.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeError(f"expected (w, h, 3) image, got {image.shape}")
    bright = image.astype(np.float64).mean(axis=2) > threshold
    if not bright.any():
        raise PreprocessError("no field of view: image is dark everywhere")
    labels, count = ndimage.label(bright, structure=np.ones((3, 3), dtype=bool))
    if count > 1:
        sizes = ndimage.sum_labels(np.ones_like(labels), labels, np.arange(1, count + 1))
        mask = labels == (1 + int(np.argmax(sizes)))
    else:
        mask = labels == 1
    cols = np.where(mask.any(axis=1))[0]
    width = int(cols[-1] - cols[0] + 1)
    return width, mask


def _resize_bilinear(image: np.ndarray, new_w: int, new_h: int) -> np.ndarray:
    """Center-aligned bilinear resampling of a (w, h, c) array."""
    w, h, c = image.shape
    if (new_w, new_h) == (w, h):
        return image.astype(np.float64, copy=True)
    xs = (np.arange(new_w) + 0.5) * (w / new_w) - 0.5
    ys = (np.arange(new_h) + 0.5) * (h / new_h) - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.clip(x0 + 1, 0, w - 1)
    y1 = np.clip(y0 + 1, 0, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)[:, None, None]
    fy = np.clip(ys - y0, 0.0, 1.0)[None, :, None]
    img = image.astype(np.float64)
    top = img[x0][:, y0] * (1 - fx) + img[x1][:, y0] * fx
    bot = img[x0][:, y1] * (1 - fx) + img[x1][:, y1] * fx
    return top * (1 - fy) + bot * fy


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(np.ceil(3.5 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian with an explicit truncated kernel and zero
    padding at the borders (equivalent to direct 2-D convolution with
    the outer product kernel)."""
    kernel = _gaussian_kernel(sigma)
    out = ndimage.convolve1d(image.astype(np.float64), kernel, axis=0,
                             mode="constant", cval=0.0)
    return ndimage.convolve1d(out, kernel, axis=1, mode="constant", cval=0.0)


def preprocess(image: np.ndarray, config: PreprocConfig) -> np.ndarray:
    """Full normalization chain; returns a (1, crop, crop, 3) float tensor
    with values in [-1, 1], exactly zero outside the eroded FOV."""
    width, _ = estimate_fov(image, config.threshold)
    scale = config.fov_width / width
    w, h, _ = image.shape
    if scale != 1.0:
        resized = _resize_bilinear(image, max(8, round(w * scale)), max(8, round(h * scale)))
    else:
        resized = image.astype(np.float64, copy=True)
    rw, mask = estimate_fov(resized, config.threshold)
    cols = np.where(mask.any(axis=1))[0]
    rows = np.where(mask.any(axis=0))[0]
    cx = 0.5 * (cols[0] + cols[-1])
    cy = 0.5 * (rows[0] + rows[-1])
    radius = rw / 2.0

    background = gaussian_blur(resized, config.sigma)
    normalized = config.gain * (resized - background) / 255.0
    np.clip(normalized, -1.0, 1.0, out=normalized)

    xs = np.arange(resized.shape[0], dtype=np.float64)
    ys = np.arange(resized.shape[1], dtype=np.float64)
    dist2 = (xs[:, None] - cx) ** 2 + (ys[None, :] - cy) ** 2
    keep = dist2 <= ((1.0 - config.erosion) * radius) ** 2
    normalized *= keep[:, :, None]

    crop = config.crop
    out = np.zeros((crop, crop, 3), dtype=np.float64)
    x_lo = int(round(cx)) - crop // 2
    y_lo = int(round(cy)) - crop // 2
    sx_lo, sx_hi = max(0, x_lo), min(resized.shape[0], x_lo + crop)
    sy_lo, sy_hi = max(0, y_lo), min(resized.shape[1], y_lo + crop)
    out[sx_lo - x_lo:sx_hi - x_lo, sy_lo - y_lo:sy_hi - y_lo] = \
        normalized[sx_lo:sx_hi, sy_lo:sy_hi]
    return out[None]


def draw_augment_params(rng: Rng, ranges: AugmentRanges) -> AugmentParams:
    """Five draws in a fixed, documented order so streams stay aligned."""
    contrast = float(rng.uniform(*ranges.contrast))
    rotation = float(rng.uniform(*ranges.rotation))
    tx = float(rng.uniform(*ranges.translate))
    ty = float(rng.uniform(*ranges.translate))
    scale = float(rng.uniform(*ranges.scale))
    flip = bool(ranges.flip and rng.random() < 0.5)
    return AugmentParams(rotation=rotation, translate=(tx, ty), scale=scale,
                         contrast=contrast, flip=flip)


def warp_affine(image: np.ndarray, rotation_deg: float, translate, scale: float) -> np.ndarray:
    """Rotate/scale about the image center then translate; bilinear
    sampling with zero outside the source extent.  Input (w, h, c)."""
    w, h, c = image.shape
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    theta = np.deg2rad(rotation_deg)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64),
                         np.arange(h, dtype=np.float64), indexing="ij")
    dx = xs - cx - translate[0]
    dy = ys - cy - translate[1]
    src_x = cx + (cos_t * dx + sin_t * dy) / scale
    src_y = cy + (-sin_t * dx + cos_t * dy) / scale
    x0 = np.floor(src_x).astype(int)
    y0 = np.floor(src_y).astype(int)
    fx = src_x - x0
    fy = src_y - y0
    out = np.zeros((w, h, c), dtype=np.float64)
    img = image.astype(np.float64)
    for ddx in (0, 1):
        for ddy in (0, 1):
            xi = x0 + ddx
            yi = y0 + ddy
            weight = (fx if ddx else 1 - fx) * (fy if ddy else 1 - fy)
            valid = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
            xi_c = np.clip(xi, 0, w - 1)
            yi_c = np.clip(yi, 0, h - 1)
            out += (weight * valid)[:, :, None] * img[xi_c, yi_c]
    return out


def augment_with_params(tensor: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Apply one parameter set: contrast, combined geometric warp, flip."""
    if tensor.ndim != 4 or tensor.shape[0] != 1:
        raise ShapeError(f"expected a (1, w, h, c) tensor, got {tensor.shape}")
    img = tensor[0].astype(np.float64)
    if params.contrast != 1.0:
        img = np.clip(img * params.contrast, -1.0, 1.0)
    if params.rotation != 0.0 or params.translate != (0.0, 0.0) or params.scale != 1.0:
        img = warp_affine(img, params.rotation, params.translate, params.scale)
    if params.flip:
        img = img[::-1].copy()
    return img[None].astype(tensor.dtype, copy=False)


def augment(tensor: np.ndarray, rng: Rng,
            ranges: AugmentRanges | None = None) -> np.ndarray:
    """Randomly transformed copy of a (1, w, h, c) tensor."""
    return augment_with_params(tensor, draw_augment_params(rng, ranges or AugmentRanges()))
