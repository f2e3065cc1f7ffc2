"""Independent reference implementations used to check the fast kernels.

Everything here is deliberately written as plain nested loops (or
brute-force enumeration) over the documented (n, w, h, c) layout, with
no shared code paths with the package.
"""

import numpy as np


def conv_forward_loops(x, weights, bias, stride, pad_w, pad_h, tied):
    """Six-nested-loop cross-correlation with explicit zero padding."""
    n, in_w, in_h, cin = x.shape
    ww, wh, _, cout = weights.shape
    out_w = (in_w + pad_w[0] + pad_w[1] - ww) // stride + 1
    out_h = (in_h + pad_h[0] + pad_h[1] - wh) // stride + 1
    out = np.zeros((n, out_w, out_h, cout), dtype=np.float64)
    for i in range(n):
        for ox in range(out_w):
            for oy in range(out_h):
                for c in range(cout):
                    acc = 0.0
                    for u in range(ww):
                        for v in range(wh):
                            sx = stride * ox + u - pad_w[0]
                            sy = stride * oy + v - pad_h[0]
                            if 0 <= sx < in_w and 0 <= sy < in_h:
                                for d in range(cin):
                                    acc += weights[u, v, d, c] * x[i, sx, sy, d]
                    if tied:
                        acc += bias[c]
                    else:
                        acc += bias[ox, oy, c]
                    out[i, ox, oy, c] = acc
    return out


def maxpool_forward_loops(x, window, stride, pad_w, pad_h):
    n, in_w, in_h, c = x.shape
    ww, wh = window
    out_w = (in_w + pad_w[0] + pad_w[1] - ww) // stride + 1
    out_h = (in_h + pad_h[0] + pad_h[1] - wh) // stride + 1
    out = np.full((n, out_w, out_h, c), -np.inf, dtype=np.float64)
    for i in range(n):
        for ox in range(out_w):
            for oy in range(out_h):
                for k in range(c):
                    best = -np.inf
                    for u in range(ww):
                        for v in range(wh):
                            sx = stride * ox + u - pad_w[0]
                            sy = stride * oy + v - pad_h[0]
                            if 0 <= sx < in_w and 0 <= sy < in_h:
                                best = max(best, x[i, sx, sy, k])
                    out[i, ox, oy, k] = best
    return out


def meanpool_forward_loops(x, window, stride, pad_w, pad_h):
    n, in_w, in_h, c = x.shape
    ww, wh = window
    out_w = (in_w + pad_w[0] + pad_w[1] - ww) // stride + 1
    out_h = (in_h + pad_h[0] + pad_h[1] - wh) // stride + 1
    out = np.zeros((n, out_w, out_h, c), dtype=np.float64)
    for i in range(n):
        for ox in range(out_w):
            for oy in range(out_h):
                for k in range(c):
                    acc = 0.0
                    for u in range(ww):
                        for v in range(wh):
                            sx = stride * ox + u - pad_w[0]
                            sy = stride * oy + v - pad_h[0]
                            if 0 <= sx < in_w and 0 <= sy < in_h:
                                acc += x[i, sx, sy, k]
                    out[i, ox, oy, k] = acc / (ww * wh)
    return out


def central_diff(fn, arr, eps=1e-6):
    """Gradient of the scalar fn(arr) by central differences, one
    component at a time.  ``arr`` is modified in place and restored."""
    grad = np.zeros_like(arr, dtype=np.float64)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        fp = fn()
        flat[i] = keep - eps
        fm = fn()
        flat[i] = keep
        gflat[i] = (fp - fm) / (2 * eps)
    return grad


def rel_err(a, b, floor=1e-8):
    """Worst componentwise relative error, ignoring components where both
    values are below the floor."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = scale > floor
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(a - b)[mask] / scale[mask]))


def pairwise_auc(scores, labels):
    """Exhaustive P(score+ > score-) + 0.5 P(tie)."""
    scores = np.asarray(scores)
    labels = np.asarray(labels)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    gt = 0
    eq = 0
    for p in pos:
        for q in neg:
            if p > q:
                gt += 1
            elif p == q:
                eq += 1
    return (2 * gt + eq) / (2.0 * len(pos) * len(neg))


def flood_fill_components(binary):
    """8-connected component labeling by explicit BFS flood fill.

    Returns a label image (0 = background, 1..k = components) with
    component ids assigned in scan order.
    """
    w, h = binary.shape
    labels = np.zeros((w, h), dtype=np.int32)
    nxt = 0
    for x0 in range(w):
        for y0 in range(h):
            if binary[x0, y0] and labels[x0, y0] == 0:
                nxt += 1
                stack = [(x0, y0)]
                labels[x0, y0] = nxt
                while stack:
                    x, y = stack.pop()
                    for dx in (-1, 0, 1):
                        for dy in (-1, 0, 1):
                            nx, ny = x + dx, y + dy
                            if 0 <= nx < w and 0 <= ny < h and binary[nx, ny] \
                                    and labels[nx, ny] == 0:
                                labels[nx, ny] = nxt
                                stack.append((nx, ny))
    return labels, nxt
