"""Dense 4-D tensor conventions and the seeded random number generator.

Canonical tensor layout
-----------------------
Every data tensor in gradmine is a C-contiguous numpy array of shape
``(n, w, h, c)``:

* ``n`` -- image index within the mini-batch (slowest axis),
* ``w`` -- horizontal pixel coordinate x,
* ``h`` -- vertical pixel coordinate y,
* ``c`` -- channel (fastest axis).

The flat offset of element ``(n, x, y, c)`` is therefore
``((n * W + x) * H + y) * C + c``.  ``flat_index`` / ``unflat_index`` are
the single source of truth for this mapping; every module that needs a
linear index (e.g. pooling winner caches) goes through them or through
numpy operations on arrays laid out this way.

Precision is chosen per network (float32 for training speed, float64 for
all gradient checking) and is uniform across a network's tensors.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ArgumentError, ShapeError

DTYPES = {"f32": np.float32, "f64": np.float64}


def dtype_of(precision: str) -> np.dtype:
    """Map a precision name ('f32' or 'f64') to a numpy dtype."""
    try:
        return np.dtype(DTYPES[precision])
    except KeyError:
        raise ArgumentError(f"unknown precision {precision!r}, expected 'f32' or 'f64'")


def check_tensor4(t: np.ndarray, name: str = "tensor") -> np.ndarray:
    """Validate the canonical 4-D layout; returns the array unchanged."""
    if not isinstance(t, np.ndarray) or t.ndim != 4:
        raise ShapeError(f"{name} must be a 4-D (n, w, h, c) array, got "
                         f"{getattr(t, 'shape', type(t))}")
    if min(t.shape) < 1:
        raise ShapeError(f"{name} has an empty axis: {t.shape}")
    return t


def flat_index(n: int, x: int, y: int, c: int, dims: tuple[int, int, int, int]) -> int:
    """Flat offset of (n, x, y, c) in the canonical n-major layout."""
    N, W, H, C = dims
    if not (0 <= n < N and 0 <= x < W and 0 <= y < H and 0 <= c < C):
        raise ShapeError(f"index ({n},{x},{y},{c}) out of bounds for dims {dims}")
    return ((n * W + x) * H + y) * C + c


def unflat_index(i: int, dims: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    """Inverse of :func:`flat_index`."""
    N, W, H, C = dims
    if not 0 <= i < N * W * H * C:
        raise ShapeError(f"flat index {i} out of bounds for dims {dims}")
    i, c = divmod(i, C)
    i, y = divmod(i, H)
    n, x = divmod(i, W)
    return n, x, y, c


def entrywise_mul_broadcast(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise product of a single-channel mask with a full tensor.

    ``a`` has shape (n, w, h, 1) and multiplies every channel of ``b``
    (shape (n, w, h, c)) by the same per-pixel factor, which is what
    keeps hue fixed when the mask plays the role of the input.
    """
    check_tensor4(a, "mask")
    check_tensor4(b, "tensor")
    if a.shape[3] != 1:
        raise ShapeError(f"mask must have a single channel, got {a.shape}")
    if a.shape[:3] != b.shape[:3]:
        raise ShapeError(f"mask dims {a.shape[:3]} do not match tensor dims {b.shape[:3]}")
    return a * b


def channel_q_norm(t: np.ndarray, q) -> np.ndarray:
    """Per-pixel q-norm across channels; output has a single channel.

    ``q`` must be a positive integer or infinity.  q = inf is the max of
    absolute channel values.
    """
    check_tensor4(t)
    if q == math.inf:
        out = np.max(np.abs(t), axis=3, keepdims=True)
    else:
        if isinstance(q, bool) or not isinstance(q, (int, np.integer)):
            raise ArgumentError(f"norm order must be a positive integer or inf, got {q!r}")
        if q < 1:
            raise ArgumentError(f"norm order must be >= 1, got {q}")
        if q == 1:
            out = np.sum(np.abs(t), axis=3, keepdims=True)
        elif q == 2:
            out = np.sqrt(np.sum(t * t, axis=3, keepdims=True))
        else:
            a = np.abs(t)
            # Rescale by the per-pixel max so a**q cannot overflow.
            peak = np.max(a, axis=3, keepdims=True)
            safe = np.where(peak > 0, peak, 1)
            out = safe * np.power(np.sum(np.power(a / safe, q), axis=3, keepdims=True), 1.0 / q)
            out = np.where(peak > 0, out, 0)
    return out.astype(t.dtype, copy=False)


class Rng:
    """Deterministic PCG64-backed generator with keyed sub-streams.

    The same 64-bit seed produces the same stream on every platform.
    ``substream`` derives an independent, reproducible child stream from
    a hashable key, used e.g. for per-image augmentation streams.
    """

    def __init__(self, seed: int, _key: tuple = ()):
        self.seed = int(seed)
        self._key = _key
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=_key)
        self._bits = np.random.PCG64(seq)
        self._gen = np.random.Generator(self._bits)

    def substream(self, *key) -> "Rng":
        """Child generator for a tuple of non-negative integers."""
        parts = []
        for k in key:
            if isinstance(k, str):
                parts.append(int.from_bytes(k.encode("utf-8"), "little") % (1 << 63))
            else:
                parts.append(int(k))
        return Rng(self.seed, self._key + tuple(parts))

    def raw64(self, count: int) -> np.ndarray:
        """Raw 64-bit outputs of the underlying PCG64 (golden-stream hook)."""
        return self._bits.random_raw(count)

    def uniform(self, lo=0.0, hi=1.0, size=None):
        return self._gen.uniform(lo, hi, size)

    def normal(self, mean=0.0, std=1.0, size=None):
        return self._gen.normal(mean, std, size)

    def integers(self, lo, hi, size=None):
        return self._gen.integers(lo, hi, size)

    def random(self, size=None):
        return self._gen.random(size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice(self, options, p=None):
        return self._gen.choice(options, p=p)
