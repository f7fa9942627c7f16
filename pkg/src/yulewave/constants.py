"""Critical decay rates, speeds and centring functions of the Yule walk.

The speed attached to an exponential tilt theta is
``c(theta) = (2 e^theta - 1) beta / theta``. The critical rates are the two
roots of ``2 e^theta (1 - theta) = 1``; they do not depend on ``beta`` while
the speeds ``c = 2 beta e^theta`` scale linearly with it.

Bracketing argument: ``g(theta) = 2 e^theta (1 - theta) - 1`` has derivative
``-2 theta e^theta``, so ``g`` increases on ``(-inf, 0)`` and decreases on
``(0, inf)``. On ``[0.5, 1]`` it falls from ``g(0.5) = e^0.5 - 1 > 0`` to
``g(1) = -1``; on ``[-2, -1]`` it rises from ``6 e^-2 - 1 < 0`` to
``4 e^-1 - 1 > 0``. Each bracket therefore holds exactly one simple root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

PLUS_BRACKET = (0.5, 1.0)
MINUS_BRACKET = (-2.0, -1.0)


@dataclass(frozen=True)
class ModelParams:
    beta: float = 1.0

    def __post_init__(self):
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be a positive finite rate, got {self.beta}")


@dataclass(frozen=True)
class CriticalConstants:
    theta_plus: float
    theta_minus: float
    c_plus: float
    c_minus: float
    beta: float
    residual_plus: float
    residual_minus: float

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "theta_plus": self.theta_plus,
            "theta_minus": self.theta_minus,
            "c_plus": self.c_plus,
            "c_minus": self.c_minus,
            "residuals": {
                "root_plus": self.residual_plus,
                "root_minus": self.residual_minus,
                "exponent_identity": self.c_plus * self.theta_plus - (self.c_plus - self.beta),
            },
        }


def root_residual(theta: float) -> float:
    return 2.0 * math.exp(theta) * (1.0 - theta) - 1.0


def c_of_theta(theta: float, params: ModelParams) -> float:
    """Speed of the exponential tilt ``theta``."""
    if theta == 0:
        raise DomainError("c(theta) has a removable singularity at theta = 0")
    return (2.0 * math.exp(theta) - 1.0) * params.beta / theta


def theta_times_c(theta: float, params: ModelParams) -> float:
    """``theta * c(theta)``, continuous through theta = 0 where it equals beta."""
    return (2.0 * math.exp(theta) - 1.0) * params.beta


def _bracketed_root(lo: float, hi: float, tol: float) -> float:
    g_lo = root_residual(lo)
    while hi - lo > 1e-6:
        mid = 0.5 * (lo + hi)
        g_mid = root_residual(mid)
        if (g_mid > 0) == (g_lo > 0):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(50):
        step = root_residual(x) / (-2.0 * x * math.exp(x))
        x -= step
        if abs(step) <= tol * 1e-3 or abs(step) < 4 * math.ulp(x):
            break
    return x


def solve_critical_thetas(params: ModelParams = ModelParams(), tol: float = 1e-14) -> CriticalConstants:
    """Bisection to 1e-6 inside the fixed brackets, then Newton polish."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    tp = _bracketed_root(*PLUS_BRACKET, tol)
    tm = _bracketed_root(*MINUS_BRACKET, tol)
    b = params.beta
    return CriticalConstants(
        theta_plus=tp,
        theta_minus=tm,
        c_plus=2.0 * b * math.exp(tp),
        c_minus=2.0 * b * math.exp(tm),
        beta=b,
        residual_plus=root_residual(tp),
        residual_minus=root_residual(tm),
    )


def centring_a(t: float, k: CriticalConstants) -> float:
    """Front of the maximum: ``c+ t - 3 ln t / (2 theta+)``."""
    if not t > 0:
        raise DomainError("centring needs t > 0")
    return k.c_plus * t - 3.0 * math.log(t) / (2.0 * k.theta_plus)


def centring_b(t: float, k: CriticalConstants) -> float:
    """Front of the minimum; theta- < 0 flips the sign of the log term."""
    if not t > 0:
        raise DomainError("centring needs t > 0")
    return k.c_minus * t - 3.0 * math.log(t) / (2.0 * k.theta_minus)


def t_n(n: int, k: CriticalConstants) -> float:
    """Typical time at which generation ``n`` is first reached."""
    if n < 1:
        raise DomainError("t_n needs n >= 1")
    return n / k.c_plus + 3.0 * math.log(n) / (2.0 * k.c_plus * k.theta_plus)


def invert_centring(target: float, k: CriticalConstants, side: str = "max") -> float:
    """Time ``t`` with ``a_t = target`` (or ``b_t``), by Newton from ``target / c``.

    Both centring functions are strictly increasing once ``t`` exceeds the
    point where the log correction stops dominating, which holds for every
    target above a few units.
    """
    if side == "max":
        f, c, th = centring_a, k.c_plus, k.theta_plus
    elif side == "min":
        f, c, th = centring_b, k.c_minus, k.theta_minus
    else:
        raise DomainError(f"unknown side {side!r}")
    t = max(target / c, 1.0)
    for _ in range(100):
        g = f(t, k) - target
        dg = c - 3.0 / (2.0 * th * t)
        if dg <= 0:
            raise DomainError(f"centring not increasing near t={t}")
        t_new = t - g / dg
        if t_new <= 0:
            t_new = 0.5 * t
        if abs(t_new - t) < 1e-14 * max(1.0, t):
            return t_new
        t = t_new
    return t
