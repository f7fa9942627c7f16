"""Event-driven simulation of the Yule tree through its generation profile.

Every leaf splits at rate ``beta`` into two children one generation deeper.
All in-scope observables depend on the tree only through the number of
leaves per generation, so that vector is the whole state.

Bulk runs (``simulate_until_time``, ``simulate_until_count`` and the batch
functions) go through a compiled particle-array kernel. The single-event
``step`` uses a Fenwick tree over generations and is the reference the kernel
is tested against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .constants import CriticalConstants, ModelParams, solve_critical_thetas, t_n
from .errors import DomainError, ResourceError, StateError
from .fenwick import FenwickTree, linear_find
from .rng import as_generator, replicate_generator

DEFAULT_CAP = 2**31


@dataclass
class GenerationProfile:
    counts: np.ndarray
    total: int = 1
    elapsed: float = 0.0
    events: int = 0

    @classmethod
    def root(cls) -> "GenerationProfile":
        return cls(np.array([1], dtype=np.int64), 1, 0.0, 0)

    @classmethod
    def from_mapping(cls, mapping: dict, elapsed: float = 0.0) -> "GenerationProfile":
        top = max(mapping) if mapping else 0
        counts = np.zeros(top + 1, dtype=np.int64)
        for g, c in mapping.items():
            counts[g] = c
        total = int(counts.sum())
        return cls(counts, total, elapsed, total - 1)

    def as_mapping(self) -> dict:
        return {int(g): int(c) for g, c in enumerate(self.counts) if c}

    def trimmed(self) -> "GenerationProfile":
        nz = np.flatnonzero(self.counts)
        top = int(nz[-1]) + 1 if len(nz) else 1
        return GenerationProfile(self.counts[:top].copy(), self.total, self.elapsed, self.events)

    def check(self):
        if np.any(self.counts < 0):
            raise StateError("negative generation count")
        if int(self.counts.sum()) != self.total:
            raise StateError("counts do not sum to total")
        if self.total != 1 + self.events:
            raise StateError("total != 1 + events")


@dataclass(frozen=True)
class Observables:
    x_max: int
    x_min: int
    f_t: int
    n_t: int


def observe(profile: GenerationProfile) -> Observables:
    if profile.total < 1:
        raise StateError("empty profile")
    nz = np.flatnonzero(profile.counts)
    top = int(nz[-1])
    return Observables(top, int(nz[0]), int(profile.counts[top]), int(profile.total))


class ProfileStepper:
    """Repeated single events on one profile using a Fenwick tree over generations."""

    def __init__(self, profile: GenerationProfile, params: ModelParams = ModelParams(), sampler: str = "fenwick"):
        if profile.total < 1:
            raise StateError("cannot step an empty profile")
        if sampler not in ("fenwick", "linear"):
            raise DomainError(f"unknown sampler {sampler!r}")
        self.params = params
        self.sampler = sampler
        self.counts = np.zeros(max(len(profile.counts) + 2, 8), dtype=np.int64)
        self.counts[: len(profile.counts)] = profile.counts
        self.tree = FenwickTree(self.counts)
        self.total = int(profile.total)
        self.events = int(profile.events)
        self.elapsed = float(profile.elapsed)
        self._comp = 0.0

    def choose(self, u: float) -> int:
        target = min(int(u * self.total), self.total - 1)
        if self.sampler == "fenwick":
            return self.tree.find(target)
        return linear_find(self.counts, target)

    def step(self, rng) -> int:
        """One split; returns the generation of the particle that split."""
        hold = -math.log(1.0 - rng.random()) / (self.params.beta * self.total)
        y = hold - self._comp
        tt = self.elapsed + y
        self._comp = (tt - self.elapsed) - y
        self.elapsed = tt
        g = self.choose(rng.random())
        if g + 1 >= len(self.counts):
            grown = np.zeros(2 * len(self.counts), dtype=np.int64)
            grown[: len(self.counts)] = self.counts
            self.counts = grown
        self.counts[g] -= 1
        self.counts[g + 1] += 2
        self.tree.add(g, -1)
        self.tree.add(g + 1, 2)
        self.total += 1
        self.events += 1
        return g

    def profile(self) -> GenerationProfile:
        return GenerationProfile(self.counts.copy(), self.total, self.elapsed, self.events).trimmed()


def step(profile: GenerationProfile, rng, params: ModelParams = ModelParams(), sampler: str = "fenwick") -> GenerationProfile:
    """Return the profile after one split; the input is left untouched."""
    stepper = ProfileStepper(profile, params, sampler)
    stepper.step(as_generator(rng))
    out = stepper.profile()
    out.check()
    return out


@dataclass
class _Run:
    """Mutable buffers of one compiled run."""

    arr: np.ndarray
    counts: np.ndarray
    state_i: np.ndarray = field(default_factory=lambda: np.array([1, 0, 0, 0, 0], dtype=np.int64))
    state_f: np.ndarray = field(default_factory=lambda: np.zeros(2))

    @classmethod
    def fresh(cls, capacity: int) -> "_Run":
        counts = np.zeros(64, dtype=np.int64)
        counts[0] = 1
        return cls(np.zeros(max(capacity, 2), dtype=np.uint8), counts)


def _run_kernel(rng: np.random.Generator, params: ModelParams, *, t_stop: float, n_stop: int,
                use_time: bool, cap: int, chunk: int) -> _Run:
    expected = int(min(math.exp(min(params.beta * t_stop, 60.0)), cap)) if use_time else n_stop
    run = _Run.fresh(min(max(2 * expected, 64), cap) if use_time else max(n_stop, 2))
    u = rng.random(min(chunk, 2 * expected + 16))
    while True:
        status = K.advance(run.arr, run.counts, run.state_i, run.state_f, u,
                           params.beta, t_stop, n_stop, use_time)
        if status == K.DONE:
            return run
        if status == K.NEED_UNIFORMS:
            pos = int(run.state_i[K.POS])
            u = np.concatenate([u[pos:], rng.random(min(chunk, max(len(u), 1024)))])
            run.state_i[K.POS] = 0
        elif status == K.NEED_CAPACITY:
            n = len(run.arr)
            if n >= cap:
                raise ResourceError(f"particle count reached the hard cap {cap}")
            grown = np.zeros(min(2 * n, cap), dtype=np.uint8)
            grown[:n] = run.arr
            run.arr = grown
        elif status == K.NEED_GENERATIONS:
            if run.state_i[K.XMAX] >= 255 - 2:
                raise ResourceError("generation index would exceed 253, beyond the byte particle store")
            grown = np.zeros(2 * len(run.counts), dtype=np.int64)
            grown[: len(run.counts)] = run.counts
            run.counts = grown


def _profile_of(run: _Run, elapsed: float) -> GenerationProfile:
    n, xmax = int(run.state_i[K.N]), int(run.state_i[K.XMAX])
    return GenerationProfile(run.counts[: xmax + 1].copy(), n, elapsed, int(run.state_i[K.EVENTS]))


def _check_time_cap(t: float, params: ModelParams, cap: int):
    if t < 0:
        raise DomainError("t must be nonnegative")
    if params.beta * t > math.log(cap):
        raise ResourceError(
            f"projected particle count e^(beta t) = {math.exp(min(params.beta * t, 700)):.3g} exceeds the hard cap {cap}")


def simulate_until_time(t: float, params: ModelParams = ModelParams(), seed=0, cap: int = DEFAULT_CAP,
                        chunk: int = 1 << 20) -> GenerationProfile:
    """Profile of the leaves alive at time ``t``; ``elapsed`` is set to ``t``."""
    _check_time_cap(t, params, cap)
    run = _run_kernel(as_generator(seed), params, t_stop=t, n_stop=0, use_time=True, cap=cap, chunk=chunk)
    return _profile_of(run, float(t))


def simulate_until_count(n: int, params: ModelParams = ModelParams(), seed=0, cap: int = DEFAULT_CAP,
                         chunk: int = 1 << 20) -> GenerationProfile:
    """Profile at the first time the population reaches ``n``: a random BST with ``n`` leaves."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if n > cap:
        raise ResourceError(f"n = {n} exceeds the hard cap {cap}")
    run = _run_kernel(as_generator(seed), params, t_stop=0.0, n_stop=int(n), use_time=False, cap=cap, chunk=chunk)
    return _profile_of(run, float(run.state_f[K.ELAPSED]))


@dataclass
class BatchResult:
    """Per-replicate observables of a batch, indexed by replicate number."""

    replicate: np.ndarray
    x_max: np.ndarray
    x_min: np.ndarray
    f_t: np.ndarray
    n_t: np.ndarray
    elapsed: np.ndarray
    profiles: list | None = None

    def columns(self) -> dict:
        return {"replicate": self.replicate, "x_max": self.x_max, "x_min": self.x_min,
                "f_t": self.f_t, "n_t": self.n_t, "elapsed": self.elapsed}

    @classmethod
    def concatenate(cls, parts: list["BatchResult"]) -> "BatchResult":
        keep = all(p.profiles is not None for p in parts)
        return cls(*(np.concatenate([getattr(p, f) for p in parts])
                     for f in ("replicate", "x_max", "x_min", "f_t", "n_t", "elapsed")),
                   profiles=[q for p in parts for q in p.profiles] if keep else None)


def _batch_worker(args) -> BatchResult:
    mode, value, beta, master_seed, start, stop, cap, keep_profiles = args
    params = ModelParams(beta)
    m = stop - start
    out = BatchResult(np.arange(start, stop, dtype=np.int64), np.empty(m, np.int64), np.empty(m, np.int64),
                      np.empty(m, np.int64), np.empty(m, np.int64), np.empty(m),
                      [] if keep_profiles else None)
    for j, i in enumerate(range(start, stop)):
        rng = replicate_generator(master_seed, i)
        if mode == "time":
            prof = simulate_until_time(value, params, rng, cap)
        else:
            prof = simulate_until_count(int(value), params, rng, cap)
        obs = observe(prof)
        out.x_max[j], out.x_min[j], out.f_t[j], out.n_t[j] = obs.x_max, obs.x_min, obs.f_t, obs.n_t
        out.elapsed[j] = prof.elapsed
        if keep_profiles:
            out.profiles.append(prof)
    return out


def simulate_batch(*, t: float | None = None, n: int | None = None, params: ModelParams = ModelParams(),
                   replicates: int, master_seed: int, cap: int = DEFAULT_CAP, workers: int = 1,
                   keep_profiles: bool = False) -> BatchResult:
    """Independent replicates stopped at time ``t`` or at population ``n``.

    Replicate ``i`` always uses the stream derived from ``(master_seed, i)``;
    the result is identical for any number of workers.
    """
    if (t is None) == (n is None):
        raise DomainError("give exactly one of t or n")
    if t is not None:
        _check_time_cap(t, params, cap)
    elif n < 1 or n > cap:
        raise (DomainError if n < 1 else ResourceError)(f"invalid population target {n}")
    mode, value = ("time", float(t)) if t is not None else ("count", int(n))
    bounds = np.linspace(0, replicates, max(1, workers) * 4 + 1 if workers > 1 else 2).astype(int)
    tasks = [(mode, value, params.beta, master_seed, int(a), int(b), cap, keep_profiles)
             for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_batch_worker, tasks))
    else:
        parts = [_batch_worker(task) for task in tasks]
    if not parts:
        return _batch_worker((mode, value, params.beta, master_seed, 0, 0, cap, keep_profiles))
    return BatchResult.concatenate(parts)


class Censored:
    """Marker returned by ``sample_tmin`` when every particle passed the barrier."""

    def __repr__(self):
        return "Censored"

    def __bool__(self):
        return False


CENSORED = Censored()


def default_barrier(n: int, k: CriticalConstants) -> float:
    return t_n(n, k) + 10.0 / k.theta_plus


def sample_tmin(n: int, params: ModelParams = ModelParams(), seed=0, barrier: float | None = None,
                node_cap: int = 1 << 24, k: CriticalConstants | None = None):
    """First time generation ``n`` is reached, read off the generation-indexed walk.

    Each particle at position ``s`` has two children at ``s + E`` with one
    shared exponential ``E`` of rate ``beta``. Particles past ``barrier`` are
    discarded; ``CENSORED`` is returned when nothing reaches generation ``n``
    below it. The stream of uniforms is consumed in order of increasing
    position, so runs that share a seed but differ in barrier are coupled:
    the result is ``min(T, inf if T > barrier)`` for one common ``T``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    k = k or solve_critical_thetas(params)
    if barrier is None:
        barrier = default_barrier(n, k)
    if not barrier > 0:
        raise DomainError("barrier must be positive")
    rng = as_generator(seed)
    u = rng.random(4096)
    size = 1024
    while True:
        keys = np.empty(size)
        gens = np.empty(size, dtype=np.int64)
        value, used, status = K.first_passage(u, int(n), params.beta, float(barrier), keys, gens)
        if status == K.DONE:
            return CENSORED if math.isinf(value) else float(value)
        if status == K.NEED_UNIFORMS:
            u = np.concatenate([u, rng.random(len(u))])
        else:
            if size >= node_cap:
                raise ResourceError(f"first-passage search exceeded the node cap {node_cap}")
            size *= 4


def sample_tmin_batch(n: int, params: ModelParams, replicates: int, master_seed: int,
                      barrier: float | None = None, stream: int = 1) -> np.ndarray:
    """First-passage samples, ``inf`` marking censored replicates.

    Uses a stream separate from the time-stopped simulations of the same
    replicate index so both sides of a comparison are independent.
    """
    out = np.empty(replicates)
    k = solve_critical_thetas(params)
    for i in range(replicates):
        v = sample_tmin(n, params, replicate_generator(master_seed, i, stream), barrier, k=k)
        out[i] = math.inf if v is CENSORED else v
    return out
