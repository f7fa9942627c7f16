"""Additive and derivative martingales of the Yule walk and of the binary search tree.

Everything is a function of the generation profile. Sums of exponentials
are accumulated in log-sum-exp form.

For the tree with ``n`` leaves, ``S_n(z) = sum_leaves z^{depth}`` satisfies
``E[S_{n+1} | F_n] = S_n (n - 1 + 2z) / n``, so the martingale is
``S_n / C_{n-1}(z)`` with ``C_m(z) = prod_{k<m} (k + 2z) / (k + 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .constants import ModelParams, theta_times_c
from .errors import DomainError
from .simulator import GenerationProfile, simulate_batch


@dataclass(frozen=True)
class MartingaleSnapshot:
    kind: str
    parameter: float
    index: float
    value: float


def _levels(profile: GenerationProfile):
    g = np.flatnonzero(profile.counts)
    return g.astype(float), profile.counts[g].astype(float)


def yule_additive(profile: GenerationProfile, theta: float, params: ModelParams = ModelParams(),
                  t: float | None = None) -> float:
    """``W_t(theta) = sum_u exp(theta (X_u - c_theta t))``; ``theta = 0`` gives ``N_t e^{-beta t}``."""
    t = profile.elapsed if t is None else t
    g, c = _levels(profile)
    return float(math.exp(logsumexp(theta * g, b=c) - theta_times_c(theta, params) * t))


def yule_derivative(profile: GenerationProfile, theta: float, params: ModelParams = ModelParams(),
                    t: float | None = None) -> float:
    """``sgn(theta) sum_u (2 e^theta beta t - X_u) exp(theta (X_u - c_theta t))``."""
    if theta == 0:
        raise DomainError("the derivative martingale needs theta != 0")
    t = profile.elapsed if t is None else t
    g, c = _levels(profile)
    weight = 2.0 * math.exp(theta) * params.beta * t - g
    val, sign = logsumexp(theta * g, b=c * weight, return_sign=True)
    return float(math.copysign(1.0, theta) * sign * math.exp(val - theta_times_c(theta, params) * t))


def _check_z(z: float):
    if z <= 0 and abs(2 * z - round(2 * z)) < 1e-15:
        raise DomainError(f"z = {z} is a pole of the normaliser")


def bst_normalizer(n: int, z: float) -> tuple[float, float, float]:
    """``C_n(z) = prod_{k=0}^{n-1} (k + 2z) / (k + 1)``.

    Returns (value, log of the absolute value, sign). The log is a
    compensated sum of ``log1p((2z - 1) / (k + 1))``, which keeps relative
    accuracy near machine precision even for large ``n``.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    _check_z(z)
    if n == 0:
        return 1.0, 0.0, 1.0
    k = np.arange(n, dtype=float)
    r = (2.0 * z - 1.0) / (k + 1.0)
    neg = r <= -1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(neg, np.log(np.abs(1.0 + r)), np.log1p(np.where(neg, 0.0, r)))
    logv = math.fsum(terms)
    sign = -1.0 if int(np.count_nonzero(neg)) % 2 else 1.0
    value = sign * math.exp(logv) if logv < 709 else sign * math.inf
    return value, logv, sign


def _log_s(profile: GenerationProfile, z: float):
    g, c = _levels(profile)
    if z > 0:
        return logsumexp(g * math.log(z), b=c, return_sign=True)
    # negative z: signed powers
    vals = c * np.power(z, g)
    s = float(vals.sum())
    return (math.log(abs(s)) if s != 0 else -math.inf), math.copysign(1.0, s)


def bst_additive(profile: GenerationProfile, z: float, n: int | None = None) -> float:
    """``M_n(z) = S_n(z) / C_{n-1}(z)`` for a profile with ``n`` leaves."""
    n = profile.total if n is None else n
    if profile.total != n:
        raise DomainError("profile total must equal n")
    if n < 1:
        raise DomainError("n must be at least 1")
    _check_z(z)
    ls, ss = _log_s(profile, z)
    _, lc, sc = bst_normalizer(n - 1, z)
    return float(ss * sc * math.exp(ls - lc))


def bst_derivative(profile: GenerationProfile, z: float, n: int | None = None) -> float:
    """``dM_n/dz = M_n [S_n'/S_n - sum_{k=0}^{n-2} 2 / (k + 2z)]``."""
    n = profile.total if n is None else n
    m = bst_additive(profile, z, n)
    g, c = _levels(profile)
    if z > 0:
        lz = math.log(z)
        # S'/S as a ratio of two log-sum-exps
        num, sgn = logsumexp(g * lz, b=c * g / z, return_sign=True)
        den = logsumexp(g * lz, b=c)
        ratio = sgn * math.exp(num - den)
    else:
        p = np.power(z, g)
        ratio = float(np.sum(c * g * np.power(z, g - 1)) / np.sum(c * p))
    k = np.arange(max(n - 1, 0), dtype=float)
    return float(m * (ratio - np.sum(2.0 / (k + 2 * z))))


def _split_children(profile: GenerationProfile):
    """Profiles reachable in one split, with their probabilities."""
    out = []
    n = profile.total
    for g in np.flatnonzero(profile.counts):
        counts = np.zeros(max(len(profile.counts), g + 2), dtype=np.int64)
        counts[: len(profile.counts)] = profile.counts
        counts[g] -= 1
        counts[g + 1] += 2
        out.append((profile.counts[g] / n, GenerationProfile(counts, n + 1, profile.elapsed, profile.events + 1)))
    return out


def one_step_check(profile: GenerationProfile, z: float, derivative: bool = False) -> float:
    """``|E[M_{n+1} | profile] - M_n| / |M_n|`` computed exactly over the ``n`` leaf choices."""
    f = bst_derivative if derivative else bst_additive
    now = f(profile, z)
    nxt = math.fsum(p * f(child, z) for p, child in _split_children(profile))
    if now == 0:
        return abs(nxt)
    return abs(nxt - now) / abs(now)


def derivative_samples(theta: float, t: float, replicates: int, master_seed: int,
                       params: ModelParams = ModelParams(), workers: int = 1) -> np.ndarray:
    """``dW_t(theta)`` over independent replicates."""
    batch = simulate_batch(t=t, params=params, replicates=replicates, master_seed=master_seed,
                           workers=workers, keep_profiles=True)
    return np.array([yule_derivative(p, theta, params, t) for p in batch.profiles])


def additive_samples(theta: float, t: float, replicates: int, master_seed: int,
                     params: ModelParams = ModelParams(), workers: int = 1) -> np.ndarray:
    if theta == 0:
        batch = simulate_batch(t=t, params=params, replicates=replicates, master_seed=master_seed,
                               workers=workers)
        return batch.n_t * math.exp(-params.beta * t)
    batch = simulate_batch(t=t, params=params, replicates=replicates, master_seed=master_seed,
                           workers=workers, keep_profiles=True)
    return np.array([yule_additive(p, theta, params, t) for p in batch.profiles])


def cauchy_report(early: np.ndarray, late: np.ndarray) -> dict:
    """Stabilisation summary for paired martingale samples at two horizons."""
    gap = np.median(np.abs(late - early))
    scale = abs(np.median(late))
    return {"median_gap": float(gap), "median_value": float(scale),
            "relative_gap": float(gap / scale) if scale else math.inf,
            "negative_fraction": float(np.mean(late < 0))}
