"""Log-domain quadrature on uniform grids.

Integrands are passed as ``L = ln f`` so that values far outside the double
range can be integrated. Each grid interval uses the four-point rule
``h/24 (-f0 + 13 f1 + 13 f2 - f3)`` (one-sided variants at the ends), which
is fourth-order accurate for smooth ``f``.
"""

from __future__ import annotations

import math

import numpy as np

_INTERIOR = np.array([-1.0, 13.0, 13.0, -1.0]) / 24.0
_FIRST = np.array([9.0, 19.0, -5.0, 1.0]) / 24.0
_LAST = np.array([1.0, -5.0, 19.0, 9.0]) / 24.0
STEEP = 2.0


def log_interval_integrals(L: np.ndarray, h: float) -> np.ndarray:
    """``ln`` of the integral of ``exp(L)`` over each of the ``len(L) - 1`` intervals."""
    L = np.asarray(L, dtype=float)
    n = len(L)
    if n < 4:
        raise ValueError("need at least four grid points")
    # stencil start for interval j is clip(j - 1, 0, n - 4)
    V = np.empty((4, n - 1))
    V[:, 1:n - 2] = np.stack([L[0:n - 3], L[1:n - 2], L[2:n - 1], L[3:n]])
    V[:, 0] = L[0:4]
    V[:, n - 2] = L[n - 4:n]
    W = np.empty((4, n - 1))
    W[:, :] = _INTERIOR[:, None]
    W[:, 0] = _FIRST
    W[:, n - 2] = _LAST
    m = V.max(axis=0)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore", over="ignore"):
        val = (W * np.exp(V - m)).sum(axis=0)
        swing = np.abs(V[3] - V[0])
        bend = np.abs(V[0] - 2 * V[1] + V[2]) + np.abs(V[1] - 2 * V[2] + V[3])
    finite = np.isfinite(V).all(axis=0)
    # steep and nearly log-linear: an exponential the polynomial rule would misjudge
    steep = finite & (swing > STEEP) & (bend < 0.1 * swing)
    bad = ~(val > 0) | steep
    out = np.empty(n - 1)
    with np.errstate(divide="ignore"):
        out[~bad] = math.log(h) + m[~bad] + np.log(val[~bad])
    if bad.any():
        idx = np.flatnonzero(bad)
        out[bad] = _log_loglinear(L[idx], L[idx + 1], h)
    return out


def _log_loglinear(a: np.ndarray, b: np.ndarray, h: float) -> np.ndarray:
    """``ln int exp(l(x))`` over one interval with ``l`` linear from ``a`` to ``b``."""
    hi = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        d = np.abs(b - a)
        # int_0^1 e^{-d s} ds = -expm1(-d)/d, written to stay accurate for tiny d
        factor = np.where(d > 1e-8, -np.expm1(-d) / np.where(d > 0, d, 1.0), 1.0 - 0.5 * d)
        res = math.log(h) + hi + np.log(factor)
    return np.where(np.isfinite(hi), res, -np.inf)


def log_cumulative(L: np.ndarray, h: float) -> np.ndarray:
    """``ln`` of ``int_{x_0}^{x_j} exp(L)``; the first entry is ``-inf``."""
    inc = log_interval_integrals(L, h)
    return np.concatenate([[-np.inf], np.logaddexp.accumulate(inc)])


def log_cumulative_from_right(L: np.ndarray, h: float) -> np.ndarray:
    """``ln`` of ``int_{x_j}^{x_end} exp(L)``; the last entry is ``-inf``."""
    inc = log_interval_integrals(L, h)
    return np.concatenate([np.logaddexp.accumulate(inc[::-1])[::-1], [-np.inf]])
