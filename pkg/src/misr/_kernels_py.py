"""Pure numpy versions of the hot loops; reference for the compiled module."""

import numpy as np


def _pad_for(origins, t, n):
    lo = int(origins.min())
    hi = int(origins.max()) + t - 1
    return max(0, -lo), max(0, hi)


def ete_upscale(e, filters, origins):
    s = filters.shape[0]
    t = filters.shape[2]
    h, w = e.shape
    top, bottom = _pad_for(origins[..., 0], t, h)
    left, right = _pad_for(origins[..., 1], t, w)
    ep = np.pad(e, ((top, bottom), (left, right)), mode="edge")
    out = np.empty((h * s, w * s))
    acc = np.empty((h, w))
    for sr in range(s):
        for sc in range(s):
            oy = top + int(origins[sr, sc, 0])
            ox = left + int(origins[sr, sc, 1])
            f = filters[sr, sc]
            acc.fill(0.0)
            for i in range(t):
                for j in range(t):
                    v = f[i, j]
                    if v != 0.0:
                        acc += v * ep[oy + i:oy + i + h, ox + j:ox + j + w]
            out[sr::s, sc::s] = acc
    return out


def _offsets(p):
    return [(l, m) for l in range(-p, p + 1) for m in range(-p, p + 1) if l or m]


def btv_value(x, p, alpha):
    H, W = x.shape
    xp = np.pad(x, p, mode="edge")
    total = 0.0
    for l, m in _offsets(p):
        shifted = xp[p - l:p - l + H, p - m:p - m + W]
        total += alpha ** (abs(l) + abs(m)) * np.abs(x - shifted).sum()
    return float(total)


def btv_grad(x, p, alpha):
    H, W = x.shape
    xp = np.pad(x, p, mode="edge")
    g = np.zeros((H, W))
    # transposed shifts accumulate into a padded buffer folded once at the end
    zp = np.zeros((H + 2 * p, W + 2 * p))
    for l, m in _offsets(p):
        w = alpha ** (abs(l) + abs(m))
        s = np.sign(x - xp[p - l:p - l + H, p - m:p - m + W])
        g += w * s
        zp[p - l:p - l + H, p - m:p - m + W] -= w * s
    if p:
        zp[p] += zp[:p].sum(axis=0)
        zp[p + H - 1] += zp[p + H:].sum(axis=0)
        zp = zp[p:p + H]
        zp[:, p] += zp[:, :p].sum(axis=1)
        zp[:, p + W - 1] += zp[:, p + W:].sum(axis=1)
        zp = zp[:, p:p + W]
    return g + zp
