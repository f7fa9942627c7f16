"""Critical travelling waves of the lattice equation ``c phi' = beta (phi - phi(x-1)^2)``.

The increasing wave at speed ``c+`` comes from a change of variables that
turns the delay equation into the pantograph problem
``Phi'(y) = -Phi(y / alpha)^2 / alpha^2``, ``Phi(0) = 1``, ``alpha = e^{beta/c}``,
with ``phi(x) = y Phi(y)`` and ``y = e^{beta x / c}``.

The same substitution at ``c-`` only yields increasing solutions, so the
decreasing wave at ``c-`` is built differently: it is shot forward in
``psi = 1 - phi`` from its two-parameter left asymptote
``psi ~ (B - x) e^{-theta- x}`` with ``B`` bisected to the separatrix, and
continued past the point where ``phi`` becomes small by the stable backward
representation ``phi(x) = (beta/c) int_x^inf e^{beta (x - s)/c} phi(s-1)^2 ds``.

Tables sit on a grid of spacing 1/128 so the unit shift is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize_scalar

from ._logquad import log_cumulative_from_right
from .constants import CriticalConstants, ModelParams, centring_a, centring_b, solve_critical_thetas
from .errors import AlignmentError, ConvergenceError, DomainError, RangeError
from .lattice import EmpiricalLattice

GRID_STEPS_PER_UNIT = 128
RESIDUAL_GATE = 1e-6


# ---------------------------------------------------------------------------
# tables


@dataclass
class WaveTable:
    """Wave values on the uniform grid ``x0 + j / steps``."""

    x0: float
    values: np.ndarray
    speed: float
    theta: float
    direction: str
    steps: int = GRID_STEPS_PER_UNIT
    log_values: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)

    @property
    def h(self) -> float:
        return 1.0 / self.steps

    @property
    def grid(self) -> np.ndarray:
        return self.x0 + np.arange(len(self.values)) / self.steps

    @property
    def x_end(self) -> float:
        return self.x0 + (len(self.values) - 1) / self.steps

    def limits(self) -> tuple[float, float]:
        """Values assumed beyond the left and right grid edges."""
        if self.direction == "increasing":
            return 0.0, 1.0
        if self.direction == "decreasing":
            return 1.0, 0.0
        return float(self.values[0]), float(self.values[-1])

    def __call__(self, x) -> np.ndarray:
        if self._spline is None:
            self._spline = CubicSpline(self.grid, self.values)
        x = np.asarray(x, dtype=float)
        out = np.clip(self._spline(x), 0.0, 1.0) if self.direction != "none" else self._spline(x)
        left, right = self.limits()
        out = np.where(x < self.x0, left, out)
        return np.where(x > self.x_end, right, out)

    def log_at_grid(self) -> np.ndarray:
        if self.log_values is not None:
            return self.log_values
        with np.errstate(divide="ignore"):
            return np.log(self.values)

    def shifted(self, s: float) -> "WaveTable":
        """Same profile read as ``x -> phi(x + s)``; only exact on the grid when ``s`` is a grid multiple."""
        j = s * self.steps
        if abs(j - round(j)) > 1e-9:
            raise AlignmentError("table shifts must be multiples of the grid spacing")
        return WaveTable(self.x0 - round(j) / self.steps, self.values, self.speed, self.theta,
                         self.direction, self.steps, self.log_values, dict(self.meta))

    def check(self, tol: float = 1e-6):
        v = self.values
        if self.direction == "none":
            return
        if np.any(v < -1e-15) or np.any(v > 1 + 1e-15):
            raise RangeError("wave values leave [0, 1]")
        d = np.diff(v)
        if self.direction == "increasing" and np.any(d < -1e-12):
            raise RangeError("increasing wave is not monotone")
        if self.direction == "decreasing" and np.any(d > 1e-12):
            raise RangeError("decreasing wave is not monotone")
        left, right = self.limits()
        if abs(v[0] - left) > tol or abs(v[-1] - right) > tol:
            raise RangeError(f"edge values {v[0]:.3g}, {v[-1]:.3g} miss the limits by more than {tol}")


@dataclass
class LatticeProfile:
    """Monotone profile sampled at sorted, not necessarily uniform, points."""

    x: np.ndarray
    values: np.ndarray
    direction: str
    meta: dict = field(default_factory=dict)

    def limits(self) -> tuple[float, float]:
        return (0.0, 1.0) if self.direction == "increasing" else (1.0, 0.0)

    def __call__(self, x) -> np.ndarray:
        left, right = self.limits()
        return np.interp(np.asarray(x, dtype=float), self.x, self.values, left=left, right=right)


# ---------------------------------------------------------------------------
# pantograph construction of the increasing wave


@dataclass
class PantographSolution:
    alpha: float
    speed: float
    radius: float
    coefficients: np.ndarray
    y: np.ndarray
    values: np.ndarray
    derivs: np.ndarray

    @property
    def y_end(self) -> float:
        return float(self.y[-1])

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z < 0) or np.any(z > self.y_end * (1 + 1e-12)):
            raise RangeError(f"pantograph evaluated outside [0, {self.y_end}]")
        out = np.empty_like(z)
        small = z <= self.radius
        out[small] = npoly.polyval(z[small], self.coefficients)
        big = ~small
        if big.any():
            out[big] = _hermite(self.y, self.values, self.derivs, z[big])
        return out

    def derivative(self, z) -> np.ndarray:
        return -self(np.asarray(z) / self.alpha) ** 2 / self.alpha**2


def _hermite(xs, vs, ds, z):
    i = np.clip(np.searchsorted(xs, z, side="right") - 1, 0, len(xs) - 2)
    h = xs[i + 1] - xs[i]
    s = (z - xs[i]) / h
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    return h00 * vs[i] + h10 * h * ds[i] + h01 * vs[i + 1] + h11 * h * ds[i + 1]


def pantograph_series(alpha: float, radius: float, tol: float = 1e-18, max_terms: int = 400) -> np.ndarray:
    """Taylor coefficients of ``Phi`` at 0, truncated once terms at ``radius`` drop below ``tol``."""
    a = [1.0]
    k = 0
    while k < max_terms:
        s = sum(a[i] * a[k - i] for i in range(k + 1))
        a.append(-(alpha ** -(k + 2)) / (k + 1) * s)
        k += 1
        if abs(a[-1]) * radius ** (k) < tol and k >= 4:
            break
    return np.array(a)


def solve_pantograph(c: float, params: ModelParams = ModelParams(), x_end: float = 2.0e4,
                     step: float = 2e-3, positivity_floor: float = 1e-12) -> PantographSolution:
    """Series on ``[0, alpha/2]``, then fourth-order marching with geometric steps.

    The right-hand side at ``y`` only involves ``Phi(y / alpha)``, which is
    always behind the marching front, so each step is a Simpson quadrature of
    already-known values and dense output is cubic Hermite on stored steps.
    ``step`` is the relative step ``h = step * max(y, 1)``.
    """
    if not c > 0:
        raise DomainError("pantograph needs a positive speed")
    if not x_end > 0:
        raise DomainError("x_end must be positive")
    alpha = math.exp(params.beta / c)
    radius = alpha / 2.0
    coef = pantograph_series(alpha, radius)
    if step * max(radius, 1.0) >= radius * (alpha - 1.0) * 0.9 or step > 0.05:
        raise DomainError("relative step too large for the compressed argument to stay behind the front")
    ys = [radius]
    vals = [float(npoly.polyval(radius, coef))]
    ders = [float(-npoly.polyval(radius / alpha, coef) ** 2 / alpha**2)]
    ys_arr = np.empty(1 << 14)
    vs_arr = np.empty_like(ys_arr)
    ds_arr = np.empty_like(ys_arr)
    ys_arr[0], vs_arr[0], ds_arr[0] = ys[0], vals[0], ders[0]
    n = 1

    def phi_at(z):
        if z <= radius:
            return float(npoly.polyval(z, coef))
        i = int(np.searchsorted(ys_arr[:n], z, side="right")) - 1
        i = min(max(i, 0), n - 2)
        return float(_hermite(ys_arr[i:i + 2], vs_arr[i:i + 2], ds_arr[i:i + 2], np.array([z]))[0])

    y = radius
    p = vals[0]
    while y < x_end:
        h = min(step * max(y, 1.0), x_end - y)
        fm = -phi_at((y + 0.5 * h) / alpha) ** 2 / alpha**2
        f1 = -phi_at((y + h) / alpha) ** 2 / alpha**2
        p = p + h * (ds_arr[n - 1] + 4.0 * fm + f1) / 6.0
        y = y + h
        if p < positivity_floor:
            raise RangeError(f"Phi falls below {positivity_floor} near y = {y:.6g}; solution ends there")
        if n == len(ys_arr):
            ys_arr, vs_arr, ds_arr = (np.resize(a, 2 * n) for a in (ys_arr, vs_arr, ds_arr))
        ys_arr[n], vs_arr[n], ds_arr[n] = y, p, f1
        n += 1
    return PantographSolution(alpha, c, radius, coef, ys_arr[:n].copy(), vs_arr[:n].copy(), ds_arr[:n].copy())


def wave_from_pantograph(p: PantographSolution, params: ModelParams = ModelParams(),
                         x_min: float = -100.0, x_max: float = 40.0, theta: float = math.nan) -> WaveTable:
    """``phi(x) = y Phi(y)`` with ``y = e^{beta x / c}`` on the 1/128 grid over ``[x_min, x_max]``."""
    steps = GRID_STEPS_PER_UNIT
    j0 = math.floor(x_min * steps)
    j1 = math.ceil(x_max * steps)
    x = np.arange(j0, j1 + 1) / steps
    y = np.exp(params.beta * x / p.speed)
    if y[-1] > p.y_end * (1 + 1e-12):
        raise RangeError(f"grid needs Phi up to {y[-1]:.6g} but the solution stops at {p.y_end:.6g}")
    phi = y * p(y)
    return WaveTable(float(x[0]), phi, p.speed, theta, "increasing", steps,
                     meta={"construction": "pantograph", "alpha": p.alpha})


def max_wave(k: CriticalConstants | None = None, params: ModelParams = ModelParams(),
             x_min: float = -100.0, x_max: float = 40.0) -> WaveTable:
    """Critical increasing wave at speed ``c+``, gated on the residual."""
    k = k or solve_critical_thetas(params)
    y_end = math.exp(params.beta * x_max / k.c_plus) * 1.001
    p = solve_pantograph(k.c_plus, params, x_end=y_end)
    w = wave_from_pantograph(p, params, x_min, x_max, theta=k.theta_plus)
    w.meta["residual"] = wave_residual(w, params, window=(-20.0, 20.0))
    _gate(w)
    return w


def _gate(w: WaveTable):
    if not w.meta["residual"] <= RESIDUAL_GATE:
        raise ConvergenceError(f"wave residual {w.meta['residual']:.3g} above {RESIDUAL_GATE}")
    w.check()


# ---------------------------------------------------------------------------
# residual and tails


def wave_residual(w: WaveTable, params: ModelParams = ModelParams(), window: tuple | None = None,
                  return_profile: bool = False):
    """Sup of ``|c phi' - beta (phi - phi(x-1)^2)|`` over interior grid points.

    Uses the fourth-order centered difference and the exact grid shift.
    """
    steps = w.steps
    if abs(steps - round(steps)) > 0 or steps <= 0:
        raise AlignmentError("grid spacing must divide 1")
    steps = int(round(steps))
    v = w.values
    h = 1.0 / steps
    idx = np.arange(max(2, steps), len(v) - 2)
    if len(idx) == 0:
        raise RangeError("table too short for the residual stencil")
    d = (v[idx - 2] - 8 * v[idx - 1] + 8 * v[idx + 1] - v[idx + 2]) / (12 * h)
    res = w.speed * d - params.beta * (v[idx] - v[idx - steps] ** 2)
    x = w.x0 + idx * h
    if window is not None:
        m = (x >= window[0] - 1e-12) & (x <= window[1] + 1e-12)
        res, x = res[m], x[m]
    sup = float(np.max(np.abs(res))) if len(res) else 0.0
    return (sup, x, res) if return_profile else sup


def constant_table(value: float, x0: float = -25.0, x1: float = 25.0, speed: float = 1.0) -> WaveTable:
    n = int(round((x1 - x0) * GRID_STEPS_PER_UNIT)) + 1
    return WaveTable(x0, np.full(n, float(value)), speed, math.nan, "none")


@dataclass(frozen=True)
class TailFit:
    constant: float
    slope: float
    max_slope_deviation: float
    window: tuple


def right_tail_check(w: WaveTable, theta: float, window: tuple | None = None,
                     band: tuple = (1e-9, 1e-3)) -> TailFit:
    """Fit ``1 - phi(x) = C x e^{-theta x}`` on the tail window.

    Without an explicit ``window`` the window is where ``1 - phi`` lies in
    ``band``. Returns the fitted constant and the largest relative deviation
    of the local slope of ``ln(1 - phi) - ln x`` from ``-theta``.
    """
    if w.direction != "increasing":
        raise DomainError("right-tail fit needs an increasing wave")
    x = w.grid
    q = 1.0 - w.values
    if window is None:
        m = (q >= band[0]) & (q <= band[1]) & (x > 0)
    else:
        m = (x >= window[0]) & (x <= window[1]) & (q > 0) & (x > 0)
    if m.sum() < 8:
        raise RangeError("tail window is empty")
    xs = x[m]
    g = np.log(q[m]) - np.log(xs)
    slope = np.polyfit(xs, g, 1)[0]
    # constant with the slope pinned at -theta
    const = math.exp(float(np.mean(g + theta * xs)))
    local = np.gradient(g, xs)
    dev = float(np.max(np.abs(local + theta)) / theta)
    return TailFit(const, float(slope), dev, (float(xs[0]), float(xs[-1])))


def left_tail_deviation(w: WaveTable, params: ModelParams, window: tuple = (-20.0, -10.0)) -> float:
    """Max relative gap between ``phi(x)`` and ``e^{beta x / c}`` on ``window``."""
    x = w.grid
    m = (x >= window[0]) & (x <= window[1])
    return float(np.max(np.abs(w.values[m] / np.exp(params.beta * x[m] / w.speed) - 1.0)))


def pantograph_tail_ratio(p: PantographSolution, decades: int = 1) -> np.ndarray:
    """``(1 - y Phi(y)) y^{c/beta - 1} / ln y`` over the largest solved decades."""
    y = np.geomspace(p.y_end / 10**decades, p.y_end, 64)
    one_minus = 1.0 - y * p(y)
    return one_minus * y ** (1.0 / math.log(p.alpha) - 1.0) / np.log(y)


@dataclass(frozen=True)
class DoubleExpCheck:
    a_bound: float
    loglog_slope: float
    window: tuple


def min_tail_check(w: WaveTable, window: tuple = (2.0, 8.0)) -> DoubleExpCheck:
    """Smallest ``A`` with ``phi(x) <= A^{2^x}`` on ``window`` and the slope of ``ln(-ln phi)``."""
    x = w.grid
    m = (x >= window[0]) & (x <= window[1])
    L = w.log_at_grid()[m]
    if np.any(~np.isfinite(L)) or np.any(L >= 0):
        raise RangeError("log values unavailable on the window")
    a = float(np.exp(np.max(L / 2.0 ** x[m])))
    slope = float(np.polyfit(x[m], np.log(-L), 1)[0])
    return DoubleExpCheck(a, slope, window)


# ---------------------------------------------------------------------------
# zero-speed family


def zero_speed_wave(p_samples, x0: float = -25.0, x1: float = 25.0) -> WaveTable:
    """``x -> P(x)^{2^x}`` for a 1-periodic ``P`` sampled at ``j / m``, ``j = 0..m-1``.

    The table grid has spacing ``1/m``; values are built from ``2^x ln P`` so
    zeros and large exponents are handled without overflow.
    """
    p = np.asarray(p_samples, dtype=float)
    if np.any(p < 0):
        raise DomainError("periodic factor must be nonnegative")
    m = len(p)
    j0 = math.floor(x0 * m)
    j = np.arange(j0, math.ceil(x1 * m) + 1)
    x = j / m
    with np.errstate(divide="ignore"):
        lp = np.log(p)[np.mod(j, m)]
    with np.errstate(invalid="ignore"):
        log_vals = np.where(lp == 0, 0.0, np.exp2(x) * lp)
    vals = np.exp(np.minimum(log_vals, 700.0))
    d = np.diff(vals)
    direction = "increasing" if np.all(d >= 0) else "decreasing" if np.all(d <= 0) else "none"
    w = WaveTable(float(x[0]), vals, 0.0, 0.0, direction, m, log_vals, {"construction": "zero-speed"})
    return w


def is_monotone(w: WaveTable, tol: float = 0.0) -> str:
    d = np.diff(w.values)
    if np.all(d >= -tol):
        return "increasing"
    if np.all(d <= tol):
        return "decreasing"
    return "none"


# ---------------------------------------------------------------------------
# decreasing wave at c-


_OPEN, _DOWN, _UP = 0, 1, 2


@nb.njit(cache=True)
def _shoot(B, x0, H, nh, nsteps, lam, beta, c, psi, dpsi):
    """March ``c psi' = beta (psi - 2 psi(x-1) + psi(x-1)^2)`` from the asymptote.

    Returns (status, last index). ``DOWN`` means psi exceeded 1 (phi turned
    negative), ``UP`` means psi started decreasing (phi rose again).
    """
    for i in range(nh + 1):
        xi = x0 + H * (i - nh)
        e = math.exp(lam * xi)
        psi[i] = (B - xi) * e
        dpsi[i] = (-1.0 + lam * (B - xi)) * e
    for i in range(nh, nh + nsteps):
        j = i - nh
        p = psi[i]
        d0 = psi[j]
        d1 = psi[j + 1]
        dm = 0.5 * (d0 + d1) + 0.125 * H * (dpsi[j] - dpsi[j + 1])
        k1 = beta * (p - 2 * d0 + d0 * d0) / c
        q = p + 0.5 * H * k1
        k2 = beta * (q - 2 * dm + dm * dm) / c
        q = p + 0.5 * H * k2
        k3 = beta * (q - 2 * dm + dm * dm) / c
        q = p + H * k3
        k4 = beta * (q - 2 * d1 + d1 * d1) / c
        pn = p + H * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        psi[i + 1] = pn
        dpsi[i + 1] = beta * (pn - 2 * d1 + d1 * d1) / c
        if pn > 1.0:
            return _DOWN, i + 1
        if dpsi[i + 1] < 0.0:
            return _UP, i + 1
    return _OPEN, nh + nsteps


def min_wave(k: CriticalConstants | None = None, params: ModelParams = ModelParams(),
             x_min: float = -25.0, x_max: float = 25.0, x_start: float = -20.0,
             handoff: float = 1e-3, fine_steps: int = 256) -> WaveTable:
    """Critical decreasing wave at speed ``c-``, normalised by its left asymptote.

    ``1 - phi(x) ~ (B - x) e^{-theta- x}`` as ``x -> -inf``; the separatrix
    value of ``B`` is found by bisection to machine precision.
    """
    k = k or solve_critical_thetas(params)
    beta, c, lam = params.beta, k.c_minus, -k.theta_minus
    H = 1.0 / fine_steps
    nh = fine_steps
    # the separatrix reaches phi ~ handoff well before x = 8 for beta = 1
    x_shoot_end = 8.0 / beta * 1.0 + 4.0
    nsteps = int(round((x_shoot_end - x_start) / H))
    psi = np.empty(nh + nsteps + 1)
    dpsi = np.empty_like(psi)

    def classify(B):
        st, last = _shoot(B, x_start, H, nh, nsteps, lam, beta, c, psi, dpsi)
        return st, last

    lo, hi = 0.0, 0.5
    while classify(lo)[0] != _UP:
        lo -= 1.0
    while classify(hi)[0] != _DOWN:
        hi += 1.0
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if classify(mid)[0] == _UP:
            lo = mid
        else:
            hi = mid
    _, last_lo = classify(lo)
    psi_lo = psi[: last_lo + 1].copy()
    _, last_hi = classify(hi)
    psi_hi = psi[: last_hi + 1].copy()
    n = min(len(psi_lo), len(psi_hi))
    head = 1.0 - 0.5 * (psi_lo[:n] + psi_hi[:n])
    xs_head = x_start + H * (np.arange(n) - nh)
    below = np.flatnonzero(head < handoff)
    if len(below) == 0:
        raise ConvergenceError("separatrix diverged before reaching the hand-off level")
    im = int(below[0])
    split = float(np.max(np.abs(psi_lo[: im + 1] - psi_hi[: im + 1])))
    if split > 1e-7:
        raise ConvergenceError(f"bracketing trajectories differ by {split:.2e} before hand-off")

    # stable backward representation on [x_m, X]
    x_end_fine = x_max + 2.0
    nt = int(round((x_end_fine - xs_head[im]) / H))
    xs = np.concatenate([xs_head[:im], xs_head[im] + H * np.arange(nt + 1)])
    with np.errstate(divide="ignore"):
        L = np.concatenate([np.log(head[:im]), np.log(head[im]) - 5.0 * (xs[im:] - xs[im])])
    tail = np.arange(im, len(xs))
    for _ in range(200):
        integrand = -beta * xs[tail] / c + 2.0 * L[tail - fine_steps]
        new = math.log(beta / c) + beta * xs[tail] / c + log_cumulative_from_right(integrand, H)
        new[-1] = new[-2] + (new[-2] - new[-3])
        # keep the shooting value at the junction itself
        change = np.max(np.abs(new[1:] - L[tail[1:]]) / np.maximum(1.0, np.abs(L[tail[1:]])))
        L[tail[1:]] = new[1:]
        if change < 1e-14:
            break
    else:
        raise ConvergenceError("tail iteration did not converge")
    junction_gap = abs(math.exp(new[0]) - head[im])

    # left of the shooting start use the asymptote itself
    B = 0.5 * (lo + hi)
    x_left = np.arange(math.floor(x_min * fine_steps), math.floor(xs[0] * fine_steps)) / fine_steps
    psi_left = (B - x_left) * np.exp(lam * x_left)
    L_all = np.concatenate([np.log1p(-psi_left), L])
    x_all = np.concatenate([x_left, xs])
    sub = fine_steps // GRID_STEPS_PER_UNIT
    keep = (x_all <= x_max + 1e-12)
    x_all, L_all = x_all[keep][::sub], L_all[keep][::sub]
    w = WaveTable(float(x_all[0]), np.exp(L_all), c, k.theta_minus, "decreasing", GRID_STEPS_PER_UNIT,
                  L_all, {"construction": "shooting", "B": B, "handoff_x": float(xs[im]),
                          "junction_gap": junction_gap})
    w.meta["residual"] = wave_residual(w, params, window=(-20.0, 20.0))
    _gate(w)
    return w


# ---------------------------------------------------------------------------
# shift fitting


def lattice_values(w, ks, centring: float, shift: float) -> np.ndarray:
    return w(np.asarray(ks, dtype=float) - centring + shift)


def empirical_side(empirical: EmpiricalLattice, direction: str, ks) -> np.ndarray:
    """``P(X <= k)`` against increasing profiles, ``P(X >= k)`` against decreasing ones."""
    return empirical.cdf_at(ks) if direction == "increasing" else empirical.survival_at(ks)


def sup_distance(empirical: EmpiricalLattice, w, centring: float, shift: float, margin: int = 8) -> float:
    ks = np.arange(empirical.support[0] - margin, empirical.support[-1] + margin + 1)
    return float(np.max(np.abs(empirical_side(empirical, w.direction, ks) - lattice_values(w, ks, centring, shift))))


def fit_shift(empirical: EmpiricalLattice, w, centring: float, span: float = 4.0,
              resolution: float = 1.0 / 64) -> tuple[float, float]:
    """Shift minimising the sup distance between lattice data and the profile.

    Starts from the shift that aligns medians, scans ``[-span, span]`` around
    it, then refines with bounded Brent search in the best cell.
    """
    # median alignment: x_half where the profile crosses 1/2
    if isinstance(w, WaveTable):
        xs, vs = w.grid, w.values
    else:
        xs, vs = w.x, w.values
    i = int(np.argmin(np.abs(vs - 0.5)))
    x_half = float(xs[i])
    k_med = empirical.quantile(0.5)
    s0 = x_half - (k_med - centring)
    grid = s0 + np.arange(-span, span + resolution / 2, resolution)
    d = np.array([sup_distance(empirical, w, centring, s) for s in grid])
    b = int(np.argmin(d))
    r = minimize_scalar(lambda s: sup_distance(empirical, w, centring, s),
                        bounds=(grid[b] - resolution, grid[b] + resolution), method="bounded",
                        options={"xatol": 1e-7})
    if r.fun <= d[b]:
        return float(r.x), float(r.fun)
    return float(grid[b]), float(d[b])


# ---------------------------------------------------------------------------
# finite-size limit profiles of the binary search tree


def bst_limit_profile(side: str = "max", n_ref: int | None = None, offsets: int = 128) -> LatticeProfile:
    """Lattice limit profile of the tree height (``max``) or saturation level (``min``).

    Samples the exact finite-``n`` law at ``offsets`` tree sizes near
    ``n_ref`` whose centring ``a_{ln n}`` (resp. ``b_{ln n}``) covers one unit
    of fractional part evenly, and merges the lattice values ``k - a_{ln n}``.
    Convergence of the centred law along every fractional-part subsequence is
    exactly what the lattice limit asserts, so for large ``n_ref`` this
    approximates the limit function; the approximation error is the same
    finite-size error seen in simulation at ``n_ref``.
    """
    from .drmota import exact_bst_law

    k = solve_critical_thetas(ModelParams(1.0))
    if side == "max":
        n_ref = n_ref or 2**20
        cent = lambda L: centring_a(L, k)
        dc = lambda L: k.c_plus - 3.0 / (2.0 * k.theta_plus * L)
    elif side == "min":
        # the centring period spans a factor e^{1/c-} ~ 14.6 in n
        n_ref = n_ref or 2**22
        cent = lambda L: centring_b(L, k)
        dc = lambda L: k.c_minus - 3.0 / (2.0 * k.theta_minus * L)
    else:
        raise DomainError("side must be 'max' or 'min'")
    L_top = math.log(n_ref)
    K0 = math.floor(cent(L_top)) - 1
    sizes = []
    for j in range(offsets):
        target = K0 + j / offsets
        L = brentq(lambda z: cent(z) - target, 1.0, L_top + 1e-9)
        sizes.append(max(int(round(math.exp(L))), 1))
    law = exact_bst_law(sorted(set(sizes)), side)
    xs, vs = [], []
    for n in sizes:
        col = law.column(n)
        kk = np.arange(len(col))
        xs.append(kk - cent(math.log(n)))
        vs.append(col)
    x = np.concatenate(xs)
    v = np.concatenate(vs)
    o = np.argsort(x, kind="stable")
    direction = "increasing" if side == "max" else "decreasing"
    return LatticeProfile(x[o], v[o], direction, {"n_ref": n_ref, "side": side, "offsets": offsets})


def mixing_check(profile: LatticeProfile, w: WaveTable, speed: float, x_range=(-30.0, 20.0)) -> float:
    """Sup distance between ``w`` and the Gumbel-type mixture of ``profile``.

    With ``N_t ~ W e^t`` and ``W`` exponential, the time-``t`` extreme is the
    tree extreme at a random size, so the wave should equal
    ``int e^{u - e^u} profile(x - speed u) du`` up to a shift.
    """
    u = np.linspace(-14.0, 4.0, 4001)
    du = u[1] - u[0]
    wgt = np.exp(u - np.exp(u)) * du
    z = np.arange(x_range[0], x_range[1], 0.125)
    mz = np.array([np.sum(wgt * profile(zz - speed * u)) for zz in z])
    dist = lambda s: float(np.max(np.abs(mz - w(z + s))))
    grid = np.linspace(-25.0, 25.0, 2001)
    best = grid[int(np.argmin([dist(s) for s in grid]))]
    r = minimize_scalar(dist, bounds=(best - 0.025, best + 0.025), method="bounded")
    return float(min(r.fun, dist(best)))


# ---------------------------------------------------------------------------
# Laplace-functional representation


def estimate_phi_representation(K: float, x, derivative_samples: np.ndarray, theta: float,
                                negative_tolerance: float = 0.01):
    """Monte Carlo ``E exp(-K e^{-theta x} dW)`` at each ``x`` from shared samples.

    ``derivative_samples`` are derivative-martingale values at the horizon
    (see ``martingales.derivative_samples``). Returns (estimates, standard errors).
    """
    if not K > 0:
        raise DomainError("K must be positive")
    d = np.asarray(derivative_samples, dtype=float)
    neg = float(np.mean(d < 0))
    if neg > negative_tolerance:
        raise ConvergenceError(f"{100 * neg:.2f}% of derivative samples are negative at the horizon")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    vals = np.exp(-K * np.exp(-theta * x)[:, None] * d[None, :])
    est = vals.mean(axis=1)
    se = vals.std(axis=1, ddof=1) / math.sqrt(len(d))
    return est, se
