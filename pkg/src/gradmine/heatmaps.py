"""Heatmap generation from a trained network, blending, and export.

Two per-pixel criteria are provided, both differentiating the raw
regression output (not the training loss) with dropout disabled:

* sensitivity: the q-norm across color channels of the output's partial
  derivatives with respect to the pixel values (default q = infinity);
* hue-constrained: the absolute derivative with respect to a per-pixel
  multiplicative mask applied uniformly to all channels, so only
  hue-preserving local changes are measured.  Requires a network built
  with the mask node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import pnm
from .errors import ArgumentError, ShapeError, StateError
from .network import Network
from .tensor import channel_q_norm, check_tensor4


@dataclass(frozen=True)
class Provenance:
    checkpoint: str | None = None
    criterion: str = "sensitivity"
    q: float | None = None
    parents: tuple = ()


@dataclass
class Heatmap:
    """Nonnegative (w, h) map the size of the network input."""
    values: np.ndarray
    provenance: Provenance = field(default_factory=Provenance)

    @property
    def dims(self) -> tuple[int, int]:
        return self.values.shape


def _single_image_grads(network: Network, image: np.ndarray):
    """Forward + backward with top gradient 1 (differentiating the scalar
    output itself), dropout in inference mode."""
    check_tensor4(image, "image")
    if image.shape[0] != 1:
        raise ShapeError(f"heatmaps are per-image; got batch of {image.shape[0]}")
    _, step = network.forward(image, train=False)
    _, input_grad, image_grad = network.backward(np.ones(1, dtype=network.dtype), step)
    return input_grad, image_grad


def sensitivity_map(network: Network, image: np.ndarray, q=math.inf,
                    checkpoint: str | None = None) -> Heatmap:
    """Per-pixel q-norm across channels of d(output)/d(pixel)."""
    if not (q == math.inf or (isinstance(q, (int, np.integer))
                              and not isinstance(q, bool) and q >= 1)):
        raise ArgumentError(f"norm order must be a positive integer or inf, got {q!r}")
    _, image_grad = _single_image_grads(network, image)
    values = channel_q_norm(image_grad, q)[0, :, :, 0]
    return Heatmap(values=values.astype(np.float64),
                   provenance=Provenance(checkpoint=checkpoint,
                                         criterion="sensitivity", q=float(q)))


def hue_constrained_map(network: Network, image: np.ndarray,
                        checkpoint: str | None = None) -> Heatmap:
    """|d(output)/d(mask)| evaluated at the all-ones mask."""
    if not (network.has_mask_node and network.heatmap_mode == "hue"):
        raise StateError("hue-constrained maps need a network built with the "
                         "mask node (heatmap mode 'hue')")
    input_grad, _ = _single_image_grads(network, image)
    values = np.abs(input_grad[0, :, :, 0])
    return Heatmap(values=values.astype(np.float64),
                   provenance=Provenance(checkpoint=checkpoint, criterion="hue"))


def blend_maps(maps: list[Heatmap], weights) -> Heatmap:
    """Pixelwise weighted mean of same-sized maps; the nonnegative weights
    must sum to one (within 1e-9)."""
    if not maps:
        raise ArgumentError("need at least one map to blend")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or len(weights) != len(maps):
        raise ArgumentError(f"{len(maps)} maps but {weights.size} weights")
    if np.any(weights < 0):
        raise ArgumentError("blend weights must be nonnegative")
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ArgumentError(f"blend weights must sum to 1, got {weights.sum()!r}")
    dims = maps[0].dims
    for m in maps[1:]:
        if m.dims != dims:
            raise ArgumentError(f"map dims differ: {m.dims} vs {dims}")
    values = np.zeros(dims, dtype=np.float64)
    for w, m in zip(weights, maps):
        values += w * m.values
    return Heatmap(values=values,
                   provenance=Provenance(criterion="blend",
                                         parents=tuple(m.provenance for m in maps)))


def export_map(hm: Heatmap, path, mode: str = "minmax",
               fixed_max: float | None = None) -> None:
    """Write an 8-bit P5 grayscale image plus a '<path>.scale.txt' sidecar
    recording the two scaling constants, so exported maps remain
    numerically comparable.

    ``minmax`` stretches [min, max] to [0, 255]; ``fixed`` maps
    [0, fixed_max] (recommended when comparing maps across checkpoints).
    A degenerate range exports as all-zero and is flagged in the sidecar.
    """
    v = hm.values
    if mode == "minmax":
        lo, hi = float(v.min()), float(v.max())
    elif mode == "fixed":
        if fixed_max is None or fixed_max <= 0:
            raise ArgumentError("fixed scaling needs a positive fixed_max")
        lo, hi = 0.0, float(fixed_max)
    else:
        raise ArgumentError(f"unknown scale mode {mode!r}")
    degenerate = not hi > lo
    if degenerate:
        pixels = np.zeros(v.shape, dtype=np.uint8)
    else:
        scaled = np.rint(255.0 * (v - lo) / (hi - lo))
        pixels = np.clip(scaled, 0, 255).astype(np.uint8)
    pnm.write_pgm(path, pixels)
    sidecar = str(path) + ".scale.txt"
    lines = [f"lo = {lo!r}", f"hi = {hi!r}", f"mode = {mode}"]
    if degenerate:
        lines.append("degenerate = true")
    with open(sidecar, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_exported_map(path) -> tuple[np.ndarray, float, float]:
    """Reconstruct approximate map values from an exported PGM + sidecar."""
    pixels = pnm.read_pgm(path)
    lo = hi = None
    with open(str(path) + ".scale.txt", "r", encoding="utf-8") as fh:
        for line in fh:
            key, _, value = line.partition("=")
            if key.strip() == "lo":
                lo = float(value)
            elif key.strip() == "hi":
                hi = float(value)
    if lo is None or hi is None:
        raise ArgumentError(f"sidecar for {path} lacks scaling constants")
    values = lo + (pixels.astype(np.float64) / 255.0) * (hi - lo)
    return values, lo, hi
