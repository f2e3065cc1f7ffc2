"""Network assembly and the three-pass training step.

A network is an ordered list of operator layers built from a declarative
spec (Table-1 style rows: kind, maps, window, stride, declared output
size).  Declared output sizes are authoritative: shape inference must
reproduce them exactly or the build fails naming the offending layer.

One training iteration runs four stages:

1. forward data pass, producing per-image scalar predictions,
2. backward pass of the prediction loss, producing parameter gradients
   and the gradient with respect to the input (or the hue mask),
3. forward pass of the derivative loss through the network's
   linearization, producing the second set of parameter gradients,
4. Adam update on the summed gradients.

Stage 3 treats the top gradient recorded in stage 2 as a constant of
the step; its own dependence on the parameters is not differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .errors import ArgumentError, BuildError, ShapeError, StateError
from .tensor import Rng, check_tensor4, dtype_of

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

LAYER_KINDS = ("mask", "conv", "dense", "lrelu", "maxpool", "meanpool",
               "rmspool", "dropout", "maxout")
KIND_TAGS = {k: i for i, k in enumerate(LAYER_KINDS)}


# ---------------------------------------------------------------------------
# declarative specs


@dataclass(frozen=True)
class LayerSpec:
    """One declarative layer row."""
    kind: str
    maps: int | None = None
    window: tuple[int, int] | None = None
    stride: int = 1
    out: tuple[int, int] | None = None
    alpha: float | None = None
    p: int | None = None
    tied: bool = False


@dataclass(frozen=True)
class NetworkSpec:
    """Input dims (w, h, c), layer rows, numeric precision, and whether a
    hue mask node is prepended for mask-derivative heatmaps."""
    input_dims: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]
    precision: str = "f32"
    heatmap_mode: str = "sensitivity"


@dataclass
class TrainConfig:
    """Training hyperparameters.

    ``lr_schedule`` is an optional piecewise-constant schedule given as
    ((start_iteration, lr), ...); it replaces the manual 10x drops used
    when validation performance plateaus.
    """
    nu: float = 0.0
    lr: float = 1e-4
    l2: float = 5e-4
    batch: int = 36
    alpha: float = 0.33
    dropout_p: int = 2
    seed: int = 0
    iters: int = 2000
    checkpoint_every: int = 500
    lr_schedule: tuple[tuple[int, float], ...] = ()

    def lr_at(self, step: int) -> float:
        lr = self.lr
        for start, value in self.lr_schedule:
            if step >= start:
                lr = value
        return lr


# ---------------------------------------------------------------------------
# layers


class Layer:
    kind = "?"
    has_params = False

    def __init__(self, index: int, in_dims: tuple[int, int, int]):
        self.index = index
        self.in_dims = in_dims
        self.out_dims = in_dims

    def init_params(self, rng: Rng, dtype) -> None:
        pass

    def forward(self, x, train, rng):
        raise NotImplementedError

    def backward(self, upstream, cache):
        raise NotImplementedError

    def forward_second(self, signal, cache):
        raise NotImplementedError


class MaskLayer(Layer):
    kind = "mask"

    def forward(self, x, train, rng):
        return ops.mask_forward(x)

    def backward(self, upstream, cache):
        grad_mask, grad_image = ops.mask_backward(upstream, cache)
        cache.grad_mask = grad_mask
        return grad_image, None

    def forward_second(self, signal, cache):
        return ops.mask_forward_second(signal, cache), None


class ConvLayer(Layer):
    kind = "conv"
    has_params = True

    def __init__(self, index, in_dims, maps, window, stride, declared, tied):
        super().__init__(index, in_dims)
        self.window = window
        self.stride = stride
        self.declared = declared
        self.tied = tied
        geom = ops.resolve_geom(in_dims[0], in_dims[1], window, stride, declared)
        self.out_dims = (geom.out_w, geom.out_h, maps)
        self.weights = None
        self.bias = None

    def init_params(self, rng, dtype):
        ww, wh = self.window
        cin = self.in_dims[2]
        cout = self.out_dims[2]
        fan_in = ww * wh * cin
        bound = float(np.sqrt(6.0 / fan_in))
        self.weights = rng.uniform(-bound, bound, (ww, wh, cin, cout)).astype(dtype)
        bshape = (cout,) if self.tied else (self.out_dims[0], self.out_dims[1], cout)
        self.bias = np.zeros(bshape, dtype=dtype)

    def params(self) -> ops.ConvParams:
        return ops.ConvParams(weights=self.weights, bias=self.bias,
                              stride=self.stride, tied=self.tied)

    def forward(self, x, train, rng):
        return ops.conv_forward(x, self.params(), declared=(self.out_dims[0], self.out_dims[1]))

    def backward(self, upstream, cache):
        gx, gw, gb = ops.conv_backward(upstream, cache, self.params())
        return gx, {"weights": gw, "bias": gb}

    def forward_second(self, signal, cache):
        out, gw = ops.conv_forward_second(signal, cache, cache.cached_upstream, self.params())
        return out, {"weights": gw}


class DenseLayer(ConvLayer):
    """Convolution whose window is the entire input map (output 1 x 1)."""
    kind = "dense"

    def __init__(self, index, in_dims, maps, tied):
        super().__init__(index, in_dims, maps, window=(in_dims[0], in_dims[1]),
                         stride=1, declared=(1, 1), tied=tied)


class ReluLayer(Layer):
    kind = "lrelu"

    def __init__(self, index, in_dims, alpha):
        super().__init__(index, in_dims)
        self.alpha = alpha

    def forward(self, x, train, rng):
        return ops.leaky_relu_forward(x, self.alpha)

    def backward(self, upstream, cache):
        return ops.leaky_relu_backward(upstream, cache, self.alpha), None

    def forward_second(self, signal, cache):
        return ops.leaky_relu_forward_second(signal, cache, self.alpha), None


class MaxPoolLayer(Layer):
    kind = "maxpool"

    def __init__(self, index, in_dims, window, stride, declared):
        super().__init__(index, in_dims)
        self.window = window
        self.stride = stride
        geom = ops.resolve_geom(in_dims[0], in_dims[1], window, stride, declared)
        self.out_dims = (geom.out_w, geom.out_h, in_dims[2])

    def forward(self, x, train, rng):
        return ops.maxpool_forward(x, self.window, self.stride,
                                   declared=(self.out_dims[0], self.out_dims[1]))

    def backward(self, upstream, cache):
        return ops.maxpool_backward(upstream, cache), None

    def forward_second(self, signal, cache):
        return ops.maxpool_forward_second(signal, cache), None


class MeanPoolLayer(MaxPoolLayer):
    kind = "meanpool"

    def forward(self, x, train, rng):
        return ops.meanpool_forward(x, self.window, self.stride,
                                    declared=(self.out_dims[0], self.out_dims[1]))

    def backward(self, upstream, cache):
        return ops.meanpool_backward(upstream, cache), None

    def forward_second(self, signal, cache):
        return ops.meanpool_forward_second(signal, cache), None


class RmsPoolLayer(MaxPoolLayer):
    kind = "rmspool"

    def forward(self, x, train, rng):
        return ops.rmspool_forward(x, self.window, self.stride,
                                   declared=(self.out_dims[0], self.out_dims[1]))

    def backward(self, upstream, cache):
        return ops.rmspool_backward(upstream, cache), None

    def forward_second(self, signal, cache):
        return ops.rmspool_forward_second(signal, cache), None


class DropoutLayer(Layer):
    kind = "dropout"

    def __init__(self, index, in_dims, p):
        super().__init__(index, in_dims)
        if p < 2:
            raise BuildError(f"layer {index} (dropout): p must be >= 2, got {p}")
        self.p = p

    def forward(self, x, train, rng):
        return ops.dropout_forward(x, self.p, rng=rng, train=train)

    def backward(self, upstream, cache):
        return ops.dropout_backward(upstream, cache), None

    def forward_second(self, signal, cache):
        return ops.dropout_forward_second(signal, cache), None


class MaxoutLayer(Layer):
    kind = "maxout"

    def __init__(self, index, in_dims, p):
        super().__init__(index, in_dims)
        if in_dims[2] % p != 0:
            raise BuildError(f"layer {index} (maxout): {in_dims[2]} channels not "
                             f"divisible by group size {p}")
        self.p = p
        self.out_dims = (in_dims[0], in_dims[1], in_dims[2] // p)

    def forward(self, x, train, rng):
        return ops.maxout_forward(x, self.p)

    def backward(self, upstream, cache):
        return ops.maxout_backward(upstream, cache), None

    def forward_second(self, signal, cache):
        return ops.maxout_forward_second(signal, cache), None


# ---------------------------------------------------------------------------
# parameter store


@dataclass
class ParamEntry:
    layer_index: int
    name: str                  # "weights" or "bias"


class ParamStore:
    """All learnable tensors of a network plus their Adam moments.

    Entries follow layer order, weights before bias within a layer; the
    checkpoint container serializes moments in this same order.
    """

    def __init__(self, network: "Network"):
        self.network = network
        self.entries: list[ParamEntry] = []
        for layer in network.layers:
            if layer.has_params:
                self.entries.append(ParamEntry(layer.index, "weights"))
                self.entries.append(ParamEntry(layer.index, "bias"))
        self.m = [np.zeros_like(self.get(e)) for e in self.entries]
        self.v = [np.zeros_like(self.get(e)) for e in self.entries]
        self.t = 0

    def get(self, entry: ParamEntry) -> np.ndarray:
        return getattr(self.network.layers[entry.layer_index], entry.name)

    def set(self, entry: ParamEntry, value: np.ndarray) -> None:
        setattr(self.network.layers[entry.layer_index], entry.name, value)

    def n_params(self) -> int:
        return sum(self.get(e).size for e in self.entries)


# ---------------------------------------------------------------------------
# network


class StepCaches:
    """Per-layer caches from one forward pass plus pass-order bookkeeping."""

    def __init__(self, caches: list, stamp: int):
        self.caches = caches
        self.stamp = stamp
        self.backward_done = False


class Network:
    def __init__(self, spec: NetworkSpec, layers: list[Layer]):
        self.spec = spec
        self.layers = layers
        self.dtype = dtype_of(spec.precision)
        self.heatmap_mode = spec.heatmap_mode
        self.input_dims = spec.input_dims
        self._stamp = 0

    @property
    def has_mask_node(self) -> bool:
        return bool(self.layers) and self.layers[0].kind == "mask"

    def forward(self, batch: np.ndarray, train: bool = False, rng: Rng | None = None):
        """Propagate a batch to the scalar predictions; fills all caches."""
        check_tensor4(batch, "batch")
        w, h, c = self.input_dims
        if batch.shape[1:] != (w, h, c):
            raise ShapeError(f"batch dims {batch.shape[1:]} do not match network "
                             f"input {(w, h, c)}")
        x = batch.astype(self.dtype, copy=False)
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x, train, rng)
            caches.append(cache)
        self._stamp += 1
        preds = x.reshape(batch.shape[0])
        return preds, StepCaches(caches, self._stamp)

    def backward(self, topgrad: np.ndarray, step: StepCaches):
        """Reverse pass from the prediction gradient.

        Returns (param_grads, input_grad, image_grad) where input_grad
        is the mask gradient for hue-mode networks and the image
        gradient otherwise.  Every layer's incoming upstream is retained
        in its cache for the forward-second pass.
        """
        if step.stamp != self._stamp:
            raise StateError("stale caches: backward must follow its own forward")
        n = len(topgrad)
        up = np.asarray(topgrad, dtype=self.dtype).reshape(n, 1, 1, 1)
        param_grads: dict[tuple[int, str], np.ndarray] = {}
        for layer, cache in zip(reversed(self.layers), reversed(step.caches)):
            up, grads = layer.backward(up, cache)
            if grads:
                for name, g in grads.items():
                    param_grads[(layer.index, name)] = g
        image_grad = up
        if self.has_mask_node and self.heatmap_mode == "hue":
            input_grad = step.caches[0].grad_mask
        else:
            input_grad = image_grad
        step.backward_done = True
        return param_grads, input_grad, image_grad

    def forward_second(self, seed: np.ndarray, step: StepCaches):
        """Propagate the derivative-loss seed forward through the
        linearized network, accumulating its parameter gradients."""
        if step.stamp != self._stamp:
            raise StateError("stale caches: forward-second must follow the same step")
        if not step.backward_done:
            raise StateError("forward-second requires the backward pass of the same "
                             "step to have run")
        start = 0
        sig = seed.astype(self.dtype, copy=False)
        if self.has_mask_node and self.heatmap_mode == "hue":
            expected = (seed.shape[0],) + self.input_dims[:2] + (1,)
        else:
            expected = (seed.shape[0],) + self.input_dims
        if sig.shape != expected:
            raise ShapeError(f"seed shape {sig.shape} does not match {expected}")
        grads_l0: dict[tuple[int, str], np.ndarray] = {}
        if self.has_mask_node and self.heatmap_mode != "hue":
            # sensitivity-mode seed enters below the mask node
            sig, _ = self.layers[0].forward_second(sig, step.caches[0])
            start = 1
        for layer, cache in zip(self.layers[start:], step.caches[start:]):
            sig, grads = layer.forward_second(sig, cache)
            if grads:
                for name, g in grads.items():
                    grads_l0[(layer.index, name)] = g
        return grads_l0


def build_network(spec: NetworkSpec, seed: int = 0,
                  default_alpha: float = 0.33,
                  default_dropout_p: int = 2) -> tuple[Network, ParamStore]:
    """Construct and initialize a network from its declarative spec.

    Shape inference must reproduce every declared output size; weights
    use fan-in-scaled uniform initialization and biases start at zero.
    """
    w, h, c = spec.input_dims
    if min(w, h, c) < 1:
        raise BuildError(f"input dims must be positive, got {spec.input_dims}")
    if spec.heatmap_mode not in ("sensitivity", "hue"):
        raise BuildError(f"unknown heatmap mode {spec.heatmap_mode!r}")
    dtype = dtype_of(spec.precision)
    layers: list[Layer] = []
    dims = (w, h, c)
    index = 0
    if spec.heatmap_mode == "hue":
        layers.append(MaskLayer(index, dims))
        index += 1
    for row in spec.layers:
        try:
            layer = _make_layer(index, dims, row, default_alpha, default_dropout_p)
        except (ShapeError, ArgumentError, BuildError) as exc:
            raise BuildError(f"layer {index} ({row.kind}): {exc}") from exc
        if row.out is not None and layer.out_dims[:2] != row.out:
            raise BuildError(f"layer {index} ({row.kind}): inferred output "
                             f"{layer.out_dims[:2]} != declared {row.out}")
        layers.append(layer)
        dims = layer.out_dims
        index += 1
    if not layers or layers[-1].kind != "dense" or layers[-1].out_dims != (1, 1, 1):
        raise BuildError("network must end with a single-unit dense regression layer")
    net = Network(spec, layers)
    rng = Rng(seed)
    for layer in net.layers:
        if layer.has_params:
            layer.init_params(rng.substream("init", layer.index), dtype)
    return net, ParamStore(net)


def _make_layer(index, dims, row: LayerSpec, default_alpha, default_dropout_p) -> Layer:
    kind = row.kind
    if kind == "conv":
        if row.maps is None or row.window is None:
            raise BuildError("conv rows need maps= and window=")
        return ConvLayer(index, dims, row.maps, row.window, row.stride, row.out, row.tied)
    if kind == "dense":
        if row.maps is None:
            raise BuildError("dense rows need maps=")
        return DenseLayer(index, dims, row.maps, row.tied)
    if kind == "lrelu":
        alpha = default_alpha if row.alpha is None else row.alpha
        if not 0.0 <= alpha < 1.0:
            raise BuildError(f"alpha must be in [0, 1), got {alpha}")
        return ReluLayer(index, dims, alpha)
    if kind in ("maxpool", "meanpool", "rmspool"):
        if row.window is None:
            raise BuildError(f"{kind} rows need window=")
        cls = {"maxpool": MaxPoolLayer, "meanpool": MeanPoolLayer,
               "rmspool": RmsPoolLayer}[kind]
        return cls(index, dims, row.window, row.stride, row.out)
    if kind == "dropout":
        return DropoutLayer(index, dims, default_dropout_p if row.p is None else row.p)
    if kind == "maxout":
        if row.p is not None:
            p = row.p
        elif row.maps is not None:
            if dims[2] % row.maps != 0:
                raise BuildError(f"cannot reduce {dims[2]} channels to {row.maps} maps")
            p = dims[2] // row.maps
        else:
            raise BuildError("maxout rows need maps= or p=")
        return MaxoutLayer(index, dims, p)
    raise BuildError(f"unknown layer kind {kind!r}")


# ---------------------------------------------------------------------------
# losses and updates


def forward_pass(network: Network, batch, train: bool = False, rng: Rng | None = None):
    return network.forward(batch, train=train, rng=rng)


def loss_and_grad(predictions: np.ndarray, labels: np.ndarray):
    """Mean squared error over the batch and its prediction gradient."""
    if len(predictions) != len(labels):
        raise ShapeError(f"{len(predictions)} predictions vs {len(labels)} labels")
    labels = np.asarray(labels, dtype=predictions.dtype)
    diff = predictions - labels
    n = len(predictions)
    ll = float(np.sum(diff.astype(np.float64) ** 2) / n)
    topgrad = diff * np.asarray(2.0 / n, dtype=predictions.dtype)
    return ll, topgrad


def backward_pass(network: Network, topgrad, step: StepCaches):
    return network.backward(topgrad, step)


def l0_loss_and_seed(input_grad: np.ndarray, nu: float):
    """Sparsity term nu * ||input_grad||_1 and its subgradient seed
    nu * sign(input_grad), with sign(0) = 0."""
    if nu < 0:
        raise ArgumentError(f"sparsity factor must be >= 0, got {nu}")
    l0 = float(nu * np.sum(np.abs(input_grad), dtype=np.float64))
    seed = np.asarray(nu, dtype=input_grad.dtype) * np.sign(input_grad)
    return l0, seed


def forward_second_pass(network: Network, seed, step: StepCaches):
    return network.forward_second(seed, step)


def adam_update(store: ParamStore, grads_ll: dict, grads_l0: dict | None,
                config: TrainConfig) -> None:
    """One Adam step on the total gradient (prediction-loss gradient plus
    derivative-loss gradient plus L2 decay on weights only)."""
    store.t += 1
    t = store.t
    lr = config.lr_at(t)
    c1 = 1.0 - ADAM_BETA1 ** t
    c2 = 1.0 - ADAM_BETA2 ** t
    for i, entry in enumerate(store.entries):
        arr = store.get(entry)
        g = grads_ll[(entry.layer_index, entry.name)]
        if grads_l0 is not None:
            g0 = grads_l0.get((entry.layer_index, entry.name))
            if g0 is not None:
                g = g + g0
        if entry.name == "weights" and config.l2 > 0:
            g = g + np.asarray(2.0 * config.l2, dtype=arr.dtype) * arr
        m = store.m[i]
        v = store.v[i]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        update = (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
        arr -= np.asarray(lr, dtype=arr.dtype) * update.astype(arr.dtype, copy=False)


def train_step(network: Network, store: ParamStore, batch, labels,
               config: TrainConfig, rng: Rng):
    """One three-pass iteration; parameters change only if every stage
    succeeds."""
    preds, step = network.forward(batch, train=True, rng=rng)
    ll, topgrad = loss_and_grad(preds, labels)
    grads_ll, input_grad, _ = network.backward(topgrad, step)
    l0, seed = l0_loss_and_seed(input_grad, config.nu)
    grads_l0 = network.forward_second(seed, step)
    adam_update(store, grads_ll, grads_l0, config)
    return ll, l0


def train_step_plain(network: Network, store: ParamStore, batch, labels,
                     config: TrainConfig, rng: Rng):
    """Control engine: plain forward/backward/Adam with no third pass."""
    preds, step = network.forward(batch, train=True, rng=rng)
    ll, topgrad = loss_and_grad(preds, labels)
    grads_ll, _, _ = network.backward(topgrad, step)
    adam_update(store, grads_ll, None, config)
    return ll, 0.0


# ---------------------------------------------------------------------------
# spec parsing and presets


def parse_network_spec(text: str) -> NetworkSpec:
    """Parse the line-oriented network description format.

    Example::

        input 64 64 3
        precision f32
        mode hue
        conv maps=8 window=5 stride=2 out=32
        lrelu
        maxpool window=3 stride=2 out=16
        dense maps=1
    """
    input_dims = None
    precision = "f32"
    mode = "sensitivity"
    rows: list[LayerSpec] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        head = parts[0]
        if head == "input":
            if len(parts) != 4:
                raise BuildError(f"line {ln}: input needs 'input W H C'")
            input_dims = tuple(int(p) for p in parts[1:])
            continue
        if head == "precision":
            precision = parts[1]
            continue
        if head == "mode":
            mode = parts[1]
            continue
        if head not in LAYER_KINDS or head == "mask":
            raise BuildError(f"line {ln}: unknown layer kind {head!r}")
        kw = {}
        for item in parts[1:]:
            if "=" not in item:
                raise BuildError(f"line {ln}: expected key=value, got {item!r}")
            key, value = item.split("=", 1)
            kw[key] = value
        rows.append(_row_from_kw(head, kw, ln))
    if input_dims is None:
        raise BuildError("spec is missing the input line")
    return NetworkSpec(input_dims=input_dims, layers=tuple(rows),
                       precision=precision, heatmap_mode=mode)


def _row_from_kw(kind: str, kw: dict, ln: int) -> LayerSpec:
    def pair(value: str) -> tuple[int, int]:
        if "x" in value:
            a, b = value.split("x", 1)
            return int(a), int(b)
        return int(value), int(value)

    known = {"maps", "window", "stride", "out", "alpha", "p", "bias"}
    for key in kw:
        if key not in known:
            raise BuildError(f"line {ln}: unknown option {key!r} for {kind}")
    return LayerSpec(
        kind=kind,
        maps=int(kw["maps"]) if "maps" in kw else None,
        window=pair(kw["window"]) if "window" in kw else None,
        stride=int(kw.get("stride", 1)),
        out=pair(kw["out"]) if "out" in kw else None,
        alpha=float(kw["alpha"]) if "alpha" in kw else None,
        p=int(kw["p"]) if "p" in kw else None,
        tied=(kw.get("bias", "untied") == "tied"),
    )


_NET_B = """
input 448 448 3
mode hue
conv maps=32 window=4 stride=2 out=224
lrelu
conv maps=32 window=4 stride=1 out=225
lrelu
maxpool window=3 stride=2 out=112
conv maps=64 window=4 stride=2 out=56
lrelu
conv maps=64 window=4 stride=1 out=57
lrelu
conv maps=64 window=4 stride=1 out=56
lrelu
maxpool window=3 stride=2 out=27
conv maps=128 window=4 stride=1 out=28
lrelu
conv maps=128 window=4 stride=1 out=27
lrelu
conv maps=128 window=4 stride=1 out=28
lrelu
maxpool window=3 stride=2 out=13
conv maps=256 window=4 stride=1 out=14
lrelu
conv maps=256 window=4 stride=1 out=13
lrelu
conv maps=256 window=4 stride=1 out=14
lrelu
maxpool window=3 stride=2 out=6
conv maps=512 window=4 stride=1 out=5
lrelu
rmspool window=3 stride=2 out=2
dropout p=2
dense maps=1024
lrelu
maxout maps=512
dropout p=2
dense maps=1024
lrelu
maxout maps=512
dense maps=1
"""

_NET_A = """
input 448 448 3
mode hue
conv maps=32 window=5 stride=2 out=224
lrelu
conv maps=32 window=3 stride=1 out=224
lrelu
maxpool window=3 stride=2 out=111
conv maps=64 window=3 stride=2 out=56
lrelu
conv maps=64 window=3 stride=1 out=56
lrelu
conv maps=64 window=3 stride=1 out=56
lrelu
maxpool window=3 stride=2 out=27
conv maps=128 window=3 stride=1 out=27
lrelu
conv maps=128 window=3 stride=1 out=27
lrelu
conv maps=128 window=3 stride=1 out=27
lrelu
maxpool window=3 stride=2 out=13
conv maps=256 window=3 stride=1 out=13
lrelu
conv maps=256 window=3 stride=1 out=13
lrelu
conv maps=256 window=3 stride=1 out=13
lrelu
maxpool window=3 stride=2 out=6
conv maps=512 window=3 stride=1 out=6
lrelu
conv maps=512 window=3 stride=1 out=6
lrelu
rmspool window=3 stride=3 out=2
dropout p=2
dense maps=1024
lrelu
maxout maps=512
dropout p=2
dense maps=1024
lrelu
maxout maps=512
dense maps=1
"""

_TOY_REF = """
input 64 64 3
mode hue
conv maps=8 window=5 stride=2 out=32
lrelu
maxpool window=3 stride=2 out=16
conv maps=16 window=4 stride=2 out=8
lrelu
maxpool window=3 stride=2 out=4
conv maps=32 window=3 stride=1 out=4
lrelu
rmspool window=2 stride=2 out=2
dense maps=32
lrelu
dense maps=1
"""

_TOY_MICRO = """
input 16 16 3
mode hue
conv maps=4 window=3 stride=2 out=8
lrelu
maxpool window=2 stride=2 out=4
dense maps=8
lrelu
dense maps=1
"""

PRESETS = {
    "net-a": _NET_A,
    "net-b": _NET_B,
    "toy-ref": _TOY_REF,
    "toy-micro": _TOY_MICRO,
}


def builtin_spec(name: str) -> NetworkSpec:
    """Named network presets (the two competition-derived structures and
    the desk-scale reference nets)."""
    try:
        return parse_network_spec(PRESETS[name])
    except KeyError:
        raise BuildError(f"unknown network preset {name!r}; "
                         f"available: {', '.join(sorted(PRESETS))}")
