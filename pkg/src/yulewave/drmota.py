"""The recursion ``y_{n+1}(x) = 1 + int_0^x y_n(t)^2 dt`` with ``y_0 = 1``.

``y_n`` is the generating function ``sum_m P(H_{m+1} <= n) x^m`` of the
height law of random binary search trees, so ``y_n(1)`` grows like
``exp(n / c+ + 3 ln n / (2 (c+ - 1)) + D)``.

Near ``x = 1`` the iterates develop a boundary layer of width about
``e^{-n / c+}``: below it ``y_n(x)`` is essentially ``1 / (1 - x)``, above it
``y_n`` levels off at ``y_n(1)``. A uniform grid on ``[0, 1]`` cannot resolve
this beyond ``n`` of a few tens. The iteration therefore runs on the graded
grid ``x = 1 - e^{-s}`` with ``s`` uniform, where the layer has unit width:

    y_{n+1}(s) = 1 + int_0^s y_n^2 e^{-u} du.

Two representations are carried. ``ln y_n`` is accurate once ``y_n`` has
levelled off. Ahead of the layer ``y_n = e^s (1 - delta_n)`` with a tiny
deficit ``delta_n`` that drives the motion of the layer and would be lost in
``ln y_n``, so ``ln delta_n`` is iterated as well through

    delta_{n+1}(s) = e^{-s} int_0^s e^u delta_n (2 - delta_n) du,

and each point takes its values from whichever form is well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import fft as sp_fft

from ._logquad import log_cumulative
from .constants import CriticalConstants, ModelParams, solve_critical_thetas
from .errors import DomainError

_LN_HALF = math.log(0.5)


@dataclass
class DrmotaState:
    n: int
    h: float
    s_max: float
    log_values: np.ndarray
    log_deficit: np.ndarray
    log_y_at_one: float

    @property
    def s_grid(self) -> np.ndarray:
        return self.h * np.arange(len(self.log_values))

    @property
    def x_grid(self) -> np.ndarray:
        """Points of ``[0, 1)`` carrying the values, ``x = 1 - e^{-s}``."""
        return -np.expm1(-self.s_grid)

    @classmethod
    def initial(cls, h: float = 2.0**-10, s_max: float = 160.0) -> "DrmotaState":
        inv = 1.0 / h
        if abs(inv - round(inv)) > 1e-9:
            raise DomainError("grid spacing must divide 1")
        if h > 2.0**-10:
            raise DomainError("grid spacing above 2^-10 is too coarse for the boundary layer")
        s = h * np.arange(int(round(s_max / h)) + 1)
        with np.errstate(divide="ignore"):
            deficit = np.log(-np.expm1(-s))
        return cls(0, h, float(s[-1]), np.zeros_like(s), deficit, 0.0)


def iterate(state: DrmotaState) -> DrmotaState:
    s = state.s_grid
    h = state.h
    Ly, Ld = state.log_values, state.log_deficit
    cum_y = log_cumulative(2.0 * Ly - s, h)
    new_y = np.logaddexp(0.0, cum_y)
    with np.errstate(divide="ignore", invalid="ignore"):
        cum_d = log_cumulative(s + Ld + np.log(2.0 - np.exp(Ld)), h)
    new_d = cum_d - s
    # beyond the grid y_n has levelled off at y_n(1); the neglected piece is y^2 e^{-s_max}
    tail = 2.0 * Ly[-1] - state.s_max
    log_one = float(np.logaddexp(0.0, np.logaddexp(cum_y[-1], tail)))
    use_d = new_d < _LN_HALF
    with np.errstate(divide="ignore", invalid="ignore"):
        Ly_next = np.where(use_d, s + np.log1p(-np.exp(new_d)), new_y)
        Ld_next = np.where(use_d, new_d, np.log(-np.expm1(np.minimum(new_y - s, 0.0))))
    Ly_next[0] = 0.0
    Ld_next[0] = -np.inf
    return DrmotaState(state.n + 1, h, state.s_max, Ly_next, Ld_next, log_one)


def log_y_at_one(n_max: int, h: float = 2.0**-10, k: CriticalConstants | None = None,
                 margin: float = 40.0) -> np.ndarray:
    """``ln y_n(1)`` for ``n = 0..n_max``."""
    k = k or solve_critical_thetas(ModelParams(1.0))
    s_max = n_max / k.c_plus + margin
    st = DrmotaState.initial(h, s_max)
    out = [0.0]
    for _ in range(n_max):
        st = iterate(st)
        out.append(st.log_y_at_one)
    return np.array(out)


@dataclass(frozen=True)
class DrmotaReport:
    n: np.ndarray
    log_y: np.ndarray
    D: np.ndarray
    cauchy_tail: float
    D_estimate: float
    growth: np.ndarray

    def growth_at(self, n: int) -> float:
        """``ln y_{n+1}(1) - ln y_n(1)``."""
        return float(self.log_y[n + 1] - self.log_y[n])


def extract_D(n_max: int = 500, k: CriticalConstants | None = None, h: float = 2.0**-10,
              log_y: np.ndarray | None = None) -> DrmotaReport:
    """``D_n = ln y_n(1) - n/c+ - 3 ln n / (2 (c+ - 1))`` and its convergence summary."""
    if n_max < 50:
        raise DomainError("n_max must be at least 50")
    k = k or solve_critical_thetas(ModelParams(1.0))
    if log_y is None:
        log_y = log_y_at_one(n_max, h, k)
    n = np.arange(1, n_max + 1)
    D = log_y[1:] - n / k.c_plus - 3.0 * np.log(n) / (2.0 * (k.c_plus - 1.0))
    jumps = np.abs(np.diff(D))
    half = n_max // 2
    return DrmotaReport(n, log_y, D, float(np.max(jumps[half - 1:])), float(np.mean(D[half:])),
                        np.diff(log_y))


def uniform_grid_log_y(n_max: int, h: float = 2.0**-10) -> np.ndarray:
    """Same recursion on a uniform grid of ``[0, 1]`` (valid only while the layer is resolved)."""
    x = np.arange(int(round(1 / h)) + 1) * h
    L = np.zeros_like(x)
    out = [0.0]
    for _ in range(n_max):
        L = np.logaddexp(0.0, log_cumulative(2.0 * L, h))
        out.append(float(L[-1]))
    return np.array(out)


def polynomial_y(n: int) -> list[Fraction]:
    """Exact rational coefficients of ``y_n`` (degree ``2^n - 1``)."""
    coef = [Fraction(1)]
    for _ in range(n):
        sq = [Fraction(0)] * (2 * len(coef) - 1)
        for i, a in enumerate(coef):
            for j, b in enumerate(coef):
                sq[i + j] += a * b
        coef = [Fraction(1)] + [c / (m + 1) for m, c in enumerate(sq)]
    return coef


# ---------------------------------------------------------------------------
# exact finite-n laws of the tree height and saturation level


@dataclass
class ExactLaw:
    """``P(H_n <= k)`` (side ``max``) or ``P(h_n >= k)`` (side ``min``) for selected ``n``."""

    side: str
    sizes: np.ndarray
    table: np.ndarray  # shape (levels, len(sizes))

    def column(self, n: int) -> np.ndarray:
        i = int(np.searchsorted(self.sizes, n))
        if i >= len(self.sizes) or self.sizes[i] != n:
            raise DomainError(f"size {n} was not computed")
        return self.table[:, i]


def _convolve_square(a: np.ndarray, exact: bool) -> np.ndarray:
    if exact:
        return np.convolve(a, a)
    size = 2 * len(a) - 1
    n = sp_fft.next_fast_len(size, real=True)
    f = sp_fft.rfft(a, n)
    return sp_fft.irfft(f * f, n)[:size]


def exact_bst_law(sizes, side: str = "max", direct_limit: int = 4096) -> ExactLaw:
    """Exact law at the requested tree sizes from the coefficient recursion.

    With ``p_k[m] = P(H_{m+1} <= k)`` the root split gives
    ``p_{k+1}[m] = (1/m) sum_{i+j=m-1} p_k[i] p_k[j]`` for ``m >= 1`` and
    ``p_{k+1}[0] = 1``; the saturation level obeys the same convolution with
    ``p_0 = 1`` everywhere and ``p_{k+1}[0] = 0``.

    The height side iterates the complement ``q = 1 - p``, for which the
    convolution reads ``(2 sum_{i<m} q_i - (q * q)[m-1]) / m``: the quadratic
    term is small wherever ``q`` is, so FFT rounding (used above
    ``direct_limit``) stays relative in the upper tail. Bounds from the leaf
    count (height at least ``log2 n``, saturation at most ``log2 n``) are
    imposed exactly.
    """
    sizes = np.unique(np.asarray(sizes, dtype=np.int64))
    if sizes[0] < 1:
        raise DomainError("tree sizes start at 1")
    if side not in ("max", "min"):
        raise DomainError("side must be 'max' or 'min'")
    N = int(sizes[-1])
    exact = N <= direct_limit
    m = np.arange(1, N, dtype=float)
    leaves = np.arange(1, N + 1, dtype=float)
    settle = 1e-15 if exact else 1e-12
    if side == "max":
        cur = np.ones(N)  # q_0: every tree with two or more leaves has height above 0
        cur[0] = 0.0
    else:
        cur = np.ones(N)
    rows = [cur[sizes - 1].copy()]
    while True:
        level = len(rows)
        sq = _convolve_square(cur, exact)[: N - 1]
        nxt = np.empty(N)
        nxt[0] = 0.0
        if side == "max":
            nxt[1:] = np.clip((2.0 * np.cumsum(cur)[: N - 1] - sq) / m, 0.0, 1.0)
            nxt[leaves > 2.0**level] = 1.0
        else:
            nxt[1:] = np.clip(sq / m, 0.0, 1.0)
            nxt[leaves < 2.0**level] = 0.0
        cur = nxt
        rows.append(cur[sizes - 1].copy())
        if np.all(rows[-1] <= settle) or len(rows) > N + 1:
            break
    table = np.array(rows)
    if side == "max":
        table = 1.0 - table
    return ExactLaw(side, sizes, table)
