"""Network operators: forward, backward, and forward second-order kernels.

Each operator comes as a triple of functions sharing one cache object:

* ``*_forward(input, ...) -> (output, cache)`` -- the data pass,
* ``*_backward(upstream, cache, ...) -> input/parameter gradients`` -- the
  usual reverse pass for a loss defined on the network output,
* ``*_forward_second(signal, cache, ...) -> signal out`` -- applies the
  operator's linearization (the same Jacobian the backward pass
  transposes) to a signal travelling in the forward direction.  This is
  the pass that turns gradients of a loss defined on *backpropagated*
  quantities into parameter gradients.

Branch decisions (rectifier side, pooling winner, dropout mask, maxout
winner) are made once, from the forward input, and recorded in the
cache; both derivative passes consume the identical record, so the two
linear maps are exact transposes of each other.

Convolution is evaluated through im2col + matrix products.  The
backward input gradient scatters through the same geometry, and the
forward-second kernel is the bias-free forward map applied to the
incoming signal, plus a weight-gradient contraction in which the signal
plays the role the data played in the ordinary weight gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, ShapeError, StateError
from .tensor import check_tensor4

# ---------------------------------------------------------------------------
# window geometry


def infer_output_size(in_size: int, window: int, stride: int,
                      declared: int | None = None) -> tuple[int, int, int]:
    """Output length and zero padding for one spatial axis.

    When a declared output length is given (layer tables state them
    explicitly), the minimal total padding that realizes it is computed
    and validated; odd padding goes after the data (bottom/right).  With
    no declared length the unpadded size floor((in - window)/stride) + 1
    is used.
    """
    if window < 1 or stride < 1 or in_size < 1:
        raise ShapeError(f"bad geometry: in={in_size} window={window} stride={stride}")
    if declared is None:
        if window > in_size:
            raise ShapeError(f"window {window} exceeds input extent {in_size}")
        return (in_size - window) // stride + 1, 0, 0
    if declared < 1:
        raise ShapeError(f"declared output size must be >= 1, got {declared}")
    pad = max(0, (declared - 1) * stride + window - in_size)
    got = (in_size + pad - window) // stride + 1
    if got != declared:
        raise ShapeError(f"cannot reach output {declared} from input {in_size} "
                         f"with window {window} stride {stride} (got {got})")
    before = pad // 2
    after = pad - before
    if before > window - 1 or after > window - 1:
        raise ShapeError(f"required padding {pad} exceeds window {window} "
                         f"(input {in_size} -> declared {declared})")
    return declared, before, after


@dataclass(frozen=True)
class WindowGeom:
    """Resolved 2-D sliding-window geometry for one layer."""
    in_w: int
    in_h: int
    win_w: int
    win_h: int
    stride: int
    out_w: int
    out_h: int
    pad_w: tuple[int, int]
    pad_h: tuple[int, int]

    @property
    def padded_w(self) -> int:
        return self.in_w + self.pad_w[0] + self.pad_w[1]

    @property
    def padded_h(self) -> int:
        return self.in_h + self.pad_h[0] + self.pad_h[1]


def resolve_geom(in_w: int, in_h: int, window: tuple[int, int], stride: int,
                 declared: tuple[int, int] | None = None) -> WindowGeom:
    dw = dh = None
    if declared is not None:
        dw, dh = declared
    ow, bw, aw = infer_output_size(in_w, window[0], stride, dw)
    oh, bh, ah = infer_output_size(in_h, window[1], stride, dh)
    return WindowGeom(in_w, in_h, window[0], window[1], stride,
                      ow, oh, (bw, aw), (bh, ah))


def _pad_input(x: np.ndarray, geom: WindowGeom, value: float = 0.0) -> np.ndarray:
    if geom.pad_w == (0, 0) and geom.pad_h == (0, 0):
        return x
    return np.pad(x, ((0, 0), geom.pad_w, geom.pad_h, (0, 0)),
                  mode="constant", constant_values=value)


def _window_view(xp: np.ndarray, geom: WindowGeom) -> np.ndarray:
    """Strided view (n, out_w, out_h, win_w, win_h, c) over the padded input."""
    n, _, _, c = xp.shape
    sn, sw, sh, sc = xp.strides
    shape = (n, geom.out_w, geom.out_h, geom.win_w, geom.win_h, c)
    strides = (sn, sw * geom.stride, sh * geom.stride, sw, sh, sc)
    return np.lib.stride_tricks.as_strided(xp, shape=shape, strides=strides)


def _im2col(x: np.ndarray, geom: WindowGeom) -> np.ndarray:
    """(n, out_w*out_h, win_w*win_h*c) patch matrix; rows follow x-major
    output order, columns follow (u, v, channel) order."""
    xp = _pad_input(x, geom)
    view = _window_view(xp, geom)
    n = x.shape[0]
    c = x.shape[3]
    return view.reshape(n, geom.out_w * geom.out_h, geom.win_w * geom.win_h * c)


def _col2im_add(gcols: np.ndarray, n: int, c: int, geom: WindowGeom,
                dtype) -> np.ndarray:
    """Scatter-add column gradients back onto the (unpadded) input grid."""
    gp = np.zeros((n, geom.padded_w, geom.padded_h, c), dtype=dtype)
    g6 = gcols.reshape(n, geom.out_w, geom.out_h, geom.win_w, geom.win_h, c)
    s = geom.stride
    for u in range(geom.win_w):
        for v in range(geom.win_h):
            gp[:, u:u + s * geom.out_w:s, v:v + s * geom.out_h:s, :] += g6[:, :, :, u, v, :]
    bw, _ = geom.pad_w
    bh, _ = geom.pad_h
    return gp[:, bw:bw + geom.in_w, bh:bh + geom.in_h, :]


# ---------------------------------------------------------------------------
# convolution (cross-correlation) and dense layers


@dataclass
class ConvParams:
    """Filter bank and bias of a convolutional layer.

    ``weights`` has shape (win_w, win_h, c_in, c_out).  ``bias`` is
    (c_out,) when tied, or (out_w, out_h, c_out) when untied (one bias
    per output location and map).
    """
    weights: np.ndarray
    bias: np.ndarray
    stride: int
    tied: bool

    @property
    def window(self) -> tuple[int, int]:
        return self.weights.shape[0], self.weights.shape[1]


@dataclass
class ConvCache:
    geom: WindowGeom
    cols: np.ndarray          # im2col of the forward input
    in_channels: int
    batch: int
    cached_upstream: np.ndarray | None = None


def conv_forward(x: np.ndarray, params: ConvParams,
                 declared: tuple[int, int] | None = None) -> tuple[np.ndarray, ConvCache]:
    """Cross-correlation of the input with the filter bank, plus bias.

    out[n,x,y,c] = sum_{u,v,d} W[u,v,d,c] * in[n, s*x+u-px, s*y+v-py, d] + b
    with zero padding outside the input extent.  The nonlinearity is a
    separate operator.
    """
    check_tensor4(x)
    ww, wh, cin, cout = params.weights.shape
    if x.shape[3] != cin:
        raise ShapeError(f"input has {x.shape[3]} channels, filters expect {cin}")
    geom = resolve_geom(x.shape[1], x.shape[2], (ww, wh), params.stride, declared)
    cols = _im2col(x, geom)
    wmat = params.weights.reshape(ww * wh * cin, cout)
    out = cols @ wmat
    out = out.reshape(x.shape[0], geom.out_w, geom.out_h, cout)
    if params.tied:
        out += params.bias
    else:
        if params.bias.shape != (geom.out_w, geom.out_h, cout):
            raise ShapeError(f"untied bias shape {params.bias.shape} does not match "
                             f"output {(geom.out_w, geom.out_h, cout)}")
        out += params.bias[None]
    cache = ConvCache(geom=geom, cols=cols, in_channels=cin, batch=x.shape[0])
    return out, cache


def conv_backward(upstream: np.ndarray, cache: ConvCache,
                  params: ConvParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients w.r.t. input, weights, and bias.

    The input gradient is the transposed scatter of the filters (an
    actual convolution); the weight gradient cross-correlates the
    upstream with the cached input patches, summed over the batch.
    """
    if cache is None or cache.cols is None:
        raise StateError("conv_backward requires the cache from conv_forward")
    geom = cache.geom
    ww, wh, cin, cout = params.weights.shape
    n = cache.batch
    if upstream.shape != (n, geom.out_w, geom.out_h, cout):
        raise ShapeError(f"upstream shape {upstream.shape} does not match forward "
                         f"output {(n, geom.out_w, geom.out_h, cout)}")
    up2 = upstream.reshape(n, geom.out_w * geom.out_h, cout)
    wmat = params.weights.reshape(ww * wh * cin, cout)
    gcols = up2 @ wmat.T
    grad_input = _col2im_add(gcols, n, cin, geom, upstream.dtype)
    grad_w = np.tensordot(cache.cols, up2, axes=([0, 1], [0, 1]))
    grad_w = grad_w.reshape(ww, wh, cin, cout)
    if params.tied:
        grad_b = upstream.sum(axis=(0, 1, 2))
    else:
        grad_b = upstream.sum(axis=0)
    cache.cached_upstream = upstream
    return grad_input, grad_w, grad_b


def conv_forward_second(signal: np.ndarray, cache: ConvCache,
                        cached_upstream: np.ndarray | None,
                        params: ConvParams) -> tuple[np.ndarray, np.ndarray]:
    """Forward second-order kernel for cross-correlation.

    The outgoing signal is the bias-free cross-correlation of the
    filters with the incoming signal (the map is linear, so its
    linearization is itself).  The weight gradient of the derivative
    loss contracts the upstream recorded during the backward pass with
    the incoming signal, exactly like the ordinary weight gradient with
    the signal standing in for the data.  Biases do not appear in the
    backward map, so they receive a zero gradient here.
    """
    if cached_upstream is None:
        raise StateError("conv_forward_second requires the upstream recorded by "
                         "the backward pass of the same step")
    geom = cache.geom
    ww, wh, cin, cout = params.weights.shape
    n = cache.batch
    if signal.shape != (n, geom.in_w, geom.in_h, cin):
        raise ShapeError(f"signal shape {signal.shape} does not match layer input "
                         f"{(n, geom.in_w, geom.in_h, cin)}")
    sig_cols = _im2col(signal, geom)
    wmat = params.weights.reshape(ww * wh * cin, cout)
    out = (sig_cols @ wmat).reshape(n, geom.out_w, geom.out_h, cout)
    up2 = cached_upstream.reshape(n, geom.out_w * geom.out_h, cout)
    grad_w_l0 = np.tensordot(sig_cols, up2, axes=([0, 1], [0, 1]))
    return out, grad_w_l0.reshape(ww, wh, cin, cout)


def dense_forward(x: np.ndarray, params: ConvParams) -> tuple[np.ndarray, ConvCache]:
    """Dense layer: a convolution whose window is the whole input map."""
    _check_dense_window(x, params)
    return conv_forward(x, params, declared=(1, 1))


def dense_backward(upstream: np.ndarray, cache: ConvCache, params: ConvParams):
    return conv_backward(upstream, cache, params)


def dense_forward_second(signal: np.ndarray, cache: ConvCache,
                         cached_upstream: np.ndarray | None, params: ConvParams):
    return conv_forward_second(signal, cache, cached_upstream, params)


def _check_dense_window(x: np.ndarray, params: ConvParams) -> None:
    ww, wh, _, _ = params.weights.shape
    if (ww, wh) != (x.shape[1], x.shape[2]):
        raise ShapeError(f"dense layer window {(ww, wh)} must equal the input map "
                         f"{(x.shape[1], x.shape[2])}")


# ---------------------------------------------------------------------------
# leaky rectifier


@dataclass
class ReluCache:
    negative: np.ndarray      # boolean mask of the forward input's sign


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha < 1.0:
        raise ArgumentError(f"rectifier slope must satisfy 0 <= alpha < 1, got {alpha}")


def leaky_relu_forward(x: np.ndarray, alpha: float) -> tuple[np.ndarray, ReluCache]:
    """max(alpha * x, x) elementwise; the input's sign mask is cached so
    both derivative passes use the identical branch decision."""
    _check_alpha(alpha)
    neg = x < 0
    out = np.where(neg, np.asarray(alpha, dtype=x.dtype) * x, x)
    return out, ReluCache(negative=neg)


def leaky_relu_backward(upstream: np.ndarray, cache: ReluCache, alpha: float) -> np.ndarray:
    """Multiplier 1 on the nonnegative branch, alpha on the negative one.

    (The chain rule gives alpha, not 1/alpha, on the negative branch;
    the finite-difference suite pins this down.)
    """
    _check_alpha(alpha)
    return np.where(cache.negative, np.asarray(alpha, dtype=upstream.dtype) * upstream, upstream)


def leaky_relu_forward_second(signal: np.ndarray, cache: ReluCache, alpha: float) -> np.ndarray:
    """Identical mask and multipliers as the backward pass."""
    _check_alpha(alpha)
    return np.where(cache.negative, np.asarray(alpha, dtype=signal.dtype) * signal, signal)


# ---------------------------------------------------------------------------
# pooling


@dataclass
class MaxPoolCache:
    geom: WindowGeom
    winners: np.ndarray       # (n, out_w*out_h, c) flat plane index into the padded grid
    channels: int
    batch: int


def _pool_view(x: np.ndarray, geom: WindowGeom, pad_value: float) -> np.ndarray:
    xp = _pad_input(x, geom, value=pad_value)
    view = _window_view(xp, geom)
    n, c = x.shape[0], x.shape[3]
    return view.reshape(n, geom.out_w * geom.out_h, geom.win_w * geom.win_h, c)


def maxpool_forward(x: np.ndarray, window: tuple[int, int], stride: int,
                    declared: tuple[int, int] | None = None) -> tuple[np.ndarray, MaxPoolCache]:
    """Windowed maximum; the winning neuron's index is cached.  Ties are
    broken by the lowest linear index inside the window."""
    check_tensor4(x)
    geom = resolve_geom(x.shape[1], x.shape[2], window, stride, declared)
    pad_value = -np.inf
    wins = _pool_view(x, geom, pad_value)
    local = np.argmax(wins, axis=2)
    out = np.take_along_axis(wins, local[:, :, None, :], axis=2)[:, :, 0, :]
    out = out.reshape(x.shape[0], geom.out_w, geom.out_h, x.shape[3])
    winners = _local_to_plane(local, geom)
    cache = MaxPoolCache(geom=geom, winners=winners, channels=x.shape[3], batch=x.shape[0])
    return out.astype(x.dtype, copy=False), cache


def _local_to_plane(local: np.ndarray, geom: WindowGeom) -> np.ndarray:
    """Map per-window argmax (u*win_h + v) to a flat (x*H + y) index on the
    padded plane."""
    n, p = local.shape[0], local.shape[1]
    u, v = np.divmod(local, geom.win_h)
    pos = np.arange(p)
    ox, oy = np.divmod(pos, geom.out_h)
    base_x = (ox * geom.stride)[None, :, None]
    base_y = (oy * geom.stride)[None, :, None]
    return (base_x + u) * geom.padded_h + (base_y + v)


def maxpool_backward(upstream: np.ndarray, cache: MaxPoolCache) -> np.ndarray:
    """Each output-cell gradient is added to its cached winner; an input
    that wins several (overlapping) windows accumulates."""
    geom = cache.geom
    n, c = cache.batch, cache.channels
    up2 = upstream.reshape(n, geom.out_w * geom.out_h, c)
    gp = np.zeros((n, geom.padded_w * geom.padded_h, c), dtype=upstream.dtype)
    ni = np.arange(n)[:, None, None]
    ci = np.arange(c)[None, None, :]
    np.add.at(gp, (ni, cache.winners, ci), up2)
    gp = gp.reshape(n, geom.padded_w, geom.padded_h, c)
    bw, bh = geom.pad_w[0], geom.pad_h[0]
    return gp[:, bw:bw + geom.in_w, bh:bh + geom.in_h, :]


def maxpool_forward_second(signal: np.ndarray, cache: MaxPoolCache) -> np.ndarray:
    """Reads the signal at the cached winner index -- the same routing the
    backward pass scatters through."""
    geom = cache.geom
    n, c = cache.batch, cache.channels
    if signal.shape != (n, geom.in_w, geom.in_h, c):
        raise ShapeError(f"signal shape {signal.shape} does not match layer input")
    sp = _pad_input(signal, geom, value=0.0)
    sp = sp.reshape(n, geom.padded_w * geom.padded_h, c)
    ni = np.arange(n)[:, None, None]
    ci = np.arange(c)[None, None, :]
    out = sp[ni, cache.winners, ci]
    return out.reshape(n, geom.out_w, geom.out_h, c)


@dataclass
class MeanPoolCache:
    geom: WindowGeom
    channels: int
    batch: int


def _meanpool_apply(x: np.ndarray, geom: WindowGeom) -> np.ndarray:
    wins = _pool_view(x, geom, 0.0)
    scale = np.asarray(1.0 / (geom.win_w * geom.win_h), dtype=x.dtype)
    out = wins.sum(axis=2) * scale
    return out.reshape(x.shape[0], geom.out_w, geom.out_h, x.shape[3])


def meanpool_forward(x: np.ndarray, window: tuple[int, int], stride: int,
                     declared: tuple[int, int] | None = None) -> tuple[np.ndarray, MeanPoolCache]:
    """Windowed mean with a fixed 1/(win_w*win_h) normalization."""
    check_tensor4(x)
    geom = resolve_geom(x.shape[1], x.shape[2], window, stride, declared)
    out = _meanpool_apply(x, geom)
    return out, MeanPoolCache(geom=geom, channels=x.shape[3], batch=x.shape[0])


def meanpool_backward(upstream: np.ndarray, cache: MeanPoolCache) -> np.ndarray:
    """The upstream value, divided by the window area, is distributed to
    every window member (accumulating over overlaps)."""
    geom = cache.geom
    n, c = cache.batch, cache.channels
    scale = np.asarray(1.0 / (geom.win_w * geom.win_h), dtype=upstream.dtype)
    up2 = (upstream * scale).reshape(n, geom.out_w * geom.out_h, c)
    gcols = np.broadcast_to(up2[:, :, None, :],
                            (n, geom.out_w * geom.out_h, geom.win_w * geom.win_h, c))
    gcols = gcols.reshape(n, geom.out_w * geom.out_h, geom.win_w * geom.win_h * c)
    # reorder (wh, c) -> interleaved columns expected by _col2im_add
    return _col2im_add(gcols, n, c, geom, upstream.dtype)


def meanpool_forward_second(signal: np.ndarray, cache: MeanPoolCache) -> np.ndarray:
    """The forward second-order kernel of a mean pool is the mean pool
    itself; this literally reuses the forward routine."""
    geom = cache.geom
    if signal.shape != (cache.batch, geom.in_w, geom.in_h, cache.channels):
        raise ShapeError(f"signal shape {signal.shape} does not match layer input")
    return _meanpool_apply(signal, geom)


RMSPOOL_EPS = 1e-12          # derivative guard at exactly-zero windows


@dataclass
class RmsPoolCache:
    geom: WindowGeom
    x: np.ndarray
    y: np.ndarray
    channels: int
    batch: int


def rmspool_forward(x: np.ndarray, window: tuple[int, int], stride: int,
                    declared: tuple[int, int] | None = None) -> tuple[np.ndarray, RmsPoolCache]:
    """Root-mean-square pooling: sqrt(meanpool(x^2))."""
    check_tensor4(x)
    geom = resolve_geom(x.shape[1], x.shape[2], window, stride, declared)
    y = np.sqrt(_meanpool_apply(x * x, geom))
    return y, RmsPoolCache(geom=geom, x=x, y=y, channels=x.shape[3], batch=x.shape[0])


def _rms_scale(cache: RmsPoolCache, dtype) -> np.ndarray:
    return 1.0 / (2.0 * np.maximum(cache.y, np.asarray(RMSPOOL_EPS, dtype=dtype)))


def rmspool_backward(upstream: np.ndarray, cache: RmsPoolCache) -> np.ndarray:
    """Stage-wise chain: sqrt', mean-pool scatter, then square'.

    dL/dx_i = up * x_i / (win_area * max(y, eps)) accumulated over
    overlapping windows."""
    geom = cache.geom
    g_mean = upstream * _rms_scale(cache, upstream.dtype)
    mp_cache = MeanPoolCache(geom=geom, channels=cache.channels, batch=cache.batch)
    g_sq = meanpool_backward(g_mean, mp_cache)
    return 2.0 * cache.x * g_sq


def rmspool_forward_second(signal: np.ndarray, cache: RmsPoolCache) -> np.ndarray:
    """The identical linearized map applied in the forward direction:
    square' multiply, mean pool, then sqrt' multiply."""
    geom = cache.geom
    if signal.shape != (cache.batch, geom.in_w, geom.in_h, cache.channels):
        raise ShapeError(f"signal shape {signal.shape} does not match layer input")
    t = 2.0 * cache.x * signal
    t = _meanpool_apply(t, geom)
    return t * _rms_scale(cache, signal.dtype)


# ---------------------------------------------------------------------------
# dropout and maxout


@dataclass
class DropoutCache:
    keep: np.ndarray | None   # (c,) boolean; None means inference pass-through
    scale: float


def dropout_forward(x: np.ndarray, p: int, rng=None,
                    train: bool = True) -> tuple[np.ndarray, DropoutCache]:
    """Drops each channel (filter) with probability 1/p during training.

    Kept channels are scaled by p/(p-1) (inverted convention) so that
    inference is a pure pass-through.  The drawn mask serves all three
    passes of the step.
    """
    check_tensor4(x)
    if p < 2:
        raise ArgumentError(f"dropout denominator must be >= 2, got {p}")
    if not train:
        return x, DropoutCache(keep=None, scale=1.0)
    if rng is None:
        raise ArgumentError("training-mode dropout needs an rng")
    keep = rng.random(x.shape[3]) >= 1.0 / p
    scale = p / (p - 1.0)
    out = x * _dropout_factor(keep, scale, x.dtype)
    return out, DropoutCache(keep=keep, scale=scale)


def _dropout_factor(keep: np.ndarray, scale: float, dtype) -> np.ndarray:
    return np.where(keep, np.asarray(scale, dtype=dtype), np.asarray(0.0, dtype=dtype))


def dropout_backward(upstream: np.ndarray, cache: DropoutCache) -> np.ndarray:
    if cache.keep is None:
        return upstream
    return upstream * _dropout_factor(cache.keep, cache.scale, upstream.dtype)


def dropout_forward_second(signal: np.ndarray, cache: DropoutCache) -> np.ndarray:
    if cache.keep is None:
        return signal
    return signal * _dropout_factor(cache.keep, cache.scale, signal.dtype)


@dataclass
class MaxoutCache:
    winners: np.ndarray       # (n, w, h, groups) winning channel within each group
    p: int
    in_channels: int


def maxout_forward(x: np.ndarray, p: int) -> tuple[np.ndarray, MaxoutCache]:
    """Channelwise maximum over consecutive groups of p channels."""
    check_tensor4(x)
    if p < 1:
        raise ArgumentError(f"maxout group size must be >= 1, got {p}")
    c = x.shape[3]
    if c % p != 0:
        raise ShapeError(f"channel count {c} not divisible by maxout group size {p}")
    g = x.reshape(x.shape[0], x.shape[1], x.shape[2], c // p, p)
    winners = np.argmax(g, axis=4)
    out = np.take_along_axis(g, winners[..., None], axis=4)[..., 0]
    return out, MaxoutCache(winners=winners, p=p, in_channels=c)


def maxout_backward(upstream: np.ndarray, cache: MaxoutCache) -> np.ndarray:
    shape = upstream.shape[:3] + (cache.in_channels // cache.p, cache.p)
    g = np.zeros(shape, dtype=upstream.dtype)
    np.put_along_axis(g, cache.winners[..., None], upstream[..., None], axis=4)
    return g.reshape(upstream.shape[:3] + (cache.in_channels,))


def maxout_forward_second(signal: np.ndarray, cache: MaxoutCache) -> np.ndarray:
    g = signal.reshape(signal.shape[:3] + (cache.in_channels // cache.p, cache.p))
    out = np.take_along_axis(g, cache.winners[..., None], axis=4)[..., 0]
    return out


# ---------------------------------------------------------------------------
# hue-preserving mask node


@dataclass
class MaskCache:
    x: np.ndarray             # the image the mask multiplies


def mask_forward(x: np.ndarray) -> tuple[np.ndarray, MaskCache]:
    """Multiplication by an all-ones per-pixel mask (fourth dimension 1).

    At the evaluation point the mask is identically one, so the output
    equals the input bitwise; the node exists so that derivatives with
    respect to the mask -- one value per pixel, shared by all channels
    -- can be taken.
    """
    check_tensor4(x)
    return x * np.asarray(1.0, dtype=x.dtype), MaskCache(x=x)


def mask_backward(upstream: np.ndarray, cache: MaskCache) -> tuple[np.ndarray, np.ndarray]:
    """Returns (grad wrt mask, grad wrt image).

    grad_mask[n,x,y,1] = sum_c upstream[n,x,y,c] * image[n,x,y,c];
    grad_image = upstream (the mask is one everywhere).
    """
    grad_mask = np.sum(upstream * cache.x, axis=3, keepdims=True)
    return grad_mask, upstream


def mask_forward_second(mask_signal: np.ndarray, cache: MaskCache) -> np.ndarray:
    """Linearization w.r.t. the mask: the signal times the image,
    broadcast over channels."""
    if mask_signal.shape != cache.x.shape[:3] + (1,):
        raise ShapeError(f"mask signal shape {mask_signal.shape} must be "
                         f"{cache.x.shape[:3] + (1,)}")
    return mask_signal * cache.x
