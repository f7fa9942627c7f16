"""Distribution functions of the extreme generations from the ODE ladder.

``h_k(t) = P(X_max(t) <= k)`` solves ``h_k' = beta (h_{k-1}^2 - h_k)`` with
``h_k(0) = 1`` and ``h_{-1} = 0``. The minimum side uses
``H_k(t) = P(X_min(t) >= k)``, the same recursion, ``H_0 = 1`` and
``H_k(0) = 0`` for ``k >= 1``.

Layers are integrated one at a time with classical RK4. The forcing
``h_{k-1}^2`` is needed at half steps; it comes from cubic Hermite
interpolation of the lower layer using its exact derivative, which keeps
the scheme fourth order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .constants import ModelParams, solve_critical_thetas
from .errors import AccuracyError, DomainError


@dataclass(frozen=True)
class HierarchySolution:
    kind: str
    kmax: int
    t_grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    beta: float

    @property
    def step(self) -> float:
        return float(self.t_grid[1] - self.t_grid[0])

    def at_time(self, t: float) -> np.ndarray:
        """All layers at time ``t`` (Hermite interpolation between grid nodes)."""
        if not 0 <= t <= self.t_grid[-1] * (1 + 1e-12):
            raise DomainError(f"t={t} outside the solved range [0, {self.t_grid[-1]}]")
        h = self.step
        j = min(int(t / h), len(self.t_grid) - 2)
        s = (t - self.t_grid[j]) / h
        if s <= 1e-14:
            return self.values[:, j].copy()
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        v = self.values
        d = self.derivs
        return h00 * v[:, j] + h10 * h * d[:, j] + h01 * v[:, j + 1] + h11 * h * d[:, j + 1]


@nb.njit(cache=True)
def _solve_ladder(values, derivs, first, lower_const, beta, h):
    """Fill ``values``/``derivs`` layer by layer from ``first``.

    Layer 0 is forced by the constant ``lower_const`` (0 below the root's
    generation for the maximum, 1 for the minimum's ``H_{-1}``).
    """
    kk, nt = values.shape
    for k in range(first, kk):
        y = values[k, 0]
        for j in range(nt):
            if k == 0:
                f0 = lower_const
                fm = lower_const
                f1 = lower_const
            else:
                a0 = values[k - 1, j]
                d0 = derivs[k - 1, j]
                if j + 1 < nt:
                    a1 = values[k - 1, j + 1]
                    d1 = derivs[k - 1, j + 1]
                else:
                    a1 = a0
                    d1 = d0
                am = 0.5 * (a0 + a1) + 0.125 * h * (d0 - d1)
                f0 = a0 * a0
                fm = am * am
                f1 = a1 * a1
            derivs[k, j] = beta * (f0 - y)
            values[k, j] = y
            if j + 1 == nt:
                break
            k1 = beta * (f0 - y)
            k2 = beta * (fm - (y + 0.5 * h * k1))
            k3 = beta * (fm - (y + 0.5 * h * k2))
            k4 = beta * (f1 - (y + h * k3))
            y = y + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _raw_solve(kind: str, kmax: int, t_end: float, beta: float, step: float):
    nt = max(int(math.ceil(t_end / step - 1e-9)), 1)
    h = t_end / nt
    t = np.linspace(0.0, t_end, nt + 1)
    values = np.zeros((kmax + 1, nt + 1))
    derivs = np.zeros_like(values)
    if kind == "max":
        values[:, 0] = 1.0
        _solve_ladder(values, derivs, 0, 0.0, beta, h)
    elif kind == "min":
        # H_0 = 1 identically; higher layers start empty
        values[0, :] = 1.0
        _solve_ladder(values, derivs, 1, 1.0, beta, h)
    else:
        raise DomainError(f"kind must be 'max' or 'min', got {kind!r}")
    return t, values, derivs


def default_kmax(kind: str, t_end: float, params: ModelParams) -> int:
    k = solve_critical_thetas(params)
    if kind == "max":
        return int(math.ceil(k.c_plus * t_end + 12.0 / k.theta_plus))
    return int(math.ceil(k.c_minus * t_end + 12.0 / abs(k.theta_minus))) + 2


def order_check(kind: str, beta: float, step: float, t_probe: float = 2.0, layers: int = 4) -> float:
    """Observed convergence order from three step sizes on a short window.

    Returns ``inf`` when the differences already sit at rounding level.
    """
    diffs = []
    ref = None
    for hh in (4 * step, 2 * step, step):
        t, v, _ = _raw_solve(kind, layers, t_probe, beta, hh)
        end = v[:, -1]
        if ref is not None:
            diffs.append(np.max(np.abs(end - ref)))
        ref = end
    coarse, fine = diffs
    if fine < 1e-12:
        return math.inf
    if not coarse > 0:
        # step too wide for the probe window to resolve anything
        return 0.0
    return math.log2(coarse / fine)


def solve_hierarchy(kind: str = "max", kmax: int | None = None, t_end: float = 10.0,
                    params: ModelParams = ModelParams(), step: float = 1e-3,
                    check_order: bool = True, tail_tol: float = 1e-9) -> HierarchySolution:
    if not t_end > 0 or not step > 0:
        raise DomainError("t_end and step must be positive")
    if kmax is None:
        kmax = default_kmax(kind, t_end, params)
        auto = True
    else:
        auto = False
    if kmax < 0:
        raise DomainError("kmax must be nonnegative")
    if check_order:
        p = order_check(kind, params.beta, step, t_probe=min(t_end, 2.0))
        if p < 3.5:
            raise AccuracyError(f"observed order {p:.2f} below 4: step {step} too large")
    while True:
        t, values, derivs = _raw_solve(kind, kmax, t_end, params.beta, step)
        edge = 1.0 - values[kmax, -1] if kind == "max" else values[kmax, -1]
        if not auto or edge <= tail_tol:
            break
        # the default is a starting point; widen until the tail is verified small
        kmax += 4
    return HierarchySolution(kind, int(kmax), t, values, derivs, params.beta)


def max_cdf(sol: HierarchySolution, k: int, t: float) -> float:
    """``P(X_max(t) <= k)``; above ``kmax`` the value at ``kmax`` is returned (see ``cdf_bound``)."""
    if sol.kind != "max":
        raise DomainError("max_cdf needs a max-kind solution")
    if k < 0:
        return 0.0
    return float(sol.at_time(t)[min(k, sol.kmax)])


def min_tail(sol: HierarchySolution, k: int, t: float) -> float:
    """``P(X_min(t) >= k)``."""
    if sol.kind != "min":
        raise DomainError("min_tail needs a min-kind solution")
    if k <= 0:
        return 1.0
    if k > sol.kmax:
        return float(sol.at_time(t)[sol.kmax])
    return float(sol.at_time(t)[k])


def min_cdf(sol: HierarchySolution, k: int, t: float) -> float:
    """``P(X_min(t) <= k) = 1 - P(X_min(t) >= k + 1)``."""
    return 1.0 - min_tail(sol, k + 1, t)


def cdf_bound(sol: HierarchySolution, k: int, t: float) -> tuple[float, float]:
    """Value and truncation error bound; the bound is zero inside the table."""
    row = sol.at_time(t)
    if sol.kind == "max":
        if k <= sol.kmax:
            return (0.0 if k < 0 else float(row[k])), 0.0
        return float(row[sol.kmax]), float(1.0 - row[sol.kmax])
    if k + 1 <= sol.kmax:
        return min_cdf(sol, k, t), 0.0
    return 1.0, float(row[sol.kmax])


def lattice_cdf(sol: HierarchySolution, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer support and CDF values ``P(X <= k)`` for ``k = 0..kmax``."""
    row = sol.at_time(t)
    k = np.arange(sol.kmax + 1)
    if sol.kind == "max":
        return k, np.clip(row, 0.0, 1.0)
    tail = np.append(row[1:], 0.0)
    return k, np.clip(1.0 - tail, 0.0, 1.0)
