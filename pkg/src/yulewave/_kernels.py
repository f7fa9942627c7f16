"""Compiled inner loops for the event-driven simulator.

Bulk runs keep one byte per live particle holding its generation. A split
picks a uniform particle index ``r``, overwrites ``arr[r]`` with the child
generation and appends the sibling at ``arr[n]``; the generation profile is
updated alongside. Uniforms are supplied in pre-drawn buffers, two per event
(holding time first, then the particle choice), so the consumed stream does
not depend on the buffer size.
"""

import math

import numba as nb
import numpy as np

DONE = 0
NEED_UNIFORMS = 1
NEED_CAPACITY = 2
NEED_GENERATIONS = 3

# state_i layout
N, XMAX, XMIN, EVENTS, POS = 0, 1, 2, 3, 4
# state_f layout
ELAPSED, COMP = 0, 1


@nb.njit(cache=True)
def advance(arr, counts, state_i, state_f, u, beta, t_stop, n_stop, use_time):
    """Run events until a stop condition or until a buffer is exhausted.

    Returns one of the status codes above. On a non-DONE status the state is
    left exactly at an event boundary and ``state_i[POS]`` points at the first
    unused uniform, so the caller can refill or grow and call again.
    """
    n = state_i[N]
    xmax = state_i[XMAX]
    xmin = state_i[XMIN]
    events = state_i[EVENTS]
    pos = state_i[POS]
    el = state_f[ELAPSED]
    comp = state_f[COMP]
    cap = arr.shape[0]
    gcap = counts.shape[0]
    nu = u.shape[0]
    status = DONE
    while True:
        if not use_time and n >= n_stop:
            break
        if pos + 2 > nu:
            status = NEED_UNIFORMS
            break
        if n >= cap:
            status = NEED_CAPACITY
            break
        if xmax + 2 >= gcap:
            status = NEED_GENERATIONS
            break
        dt = -math.log(1.0 - u[pos]) / (beta * n)
        if use_time and el + dt > t_stop:
            pos += 1
            break
        # compensated accumulation of the clock
        y = dt - comp
        tt = el + y
        comp = (tt - el) - y
        el = tt
        r = int(u[pos + 1] * n)
        if r >= n:
            r = n - 1
        pos += 2
        g = arr[r]
        arr[r] = g + 1
        arr[n] = g + 1
        counts[g] -= 1
        counts[g + 1] += 2
        n += 1
        events += 1
        if g + 1 > xmax:
            xmax = g + 1
        if g == xmin and counts[g] == 0:
            xmin = g + 1
    state_i[N] = n
    state_i[XMAX] = xmax
    state_i[XMIN] = xmin
    state_i[EVENTS] = events
    state_i[POS] = pos
    state_f[ELAPSED] = el
    state_f[COMP] = comp
    return status


@nb.njit(cache=True)
def _heap_push(keys, gens, size, key, gen):
    i = size
    keys[i] = key
    gens[i] = gen
    while i > 0:
        parent = (i - 1) >> 1
        if keys[parent] <= keys[i]:
            break
        keys[parent], keys[i] = keys[i], keys[parent]
        gens[parent], gens[i] = gens[i], gens[parent]
        i = parent
    return size + 1


@nb.njit(cache=True)
def _heap_pop(keys, gens, size):
    key = keys[0]
    gen = gens[0]
    size -= 1
    keys[0] = keys[size]
    gens[0] = gens[size]
    i = 0
    while True:
        left = 2 * i + 1
        if left >= size:
            break
        child = left
        if left + 1 < size and keys[left + 1] < keys[left]:
            child = left + 1
        if keys[i] <= keys[child]:
            break
        keys[child], keys[i] = keys[i], keys[child]
        gens[child], gens[i] = gens[i], gens[child]
        i = child
    return key, gen, size


@nb.njit(cache=True)
def first_passage(u, n_target, beta, barrier, keys, gens):
    """Best-first exploration of the generation-indexed walk.

    Nodes are expanded in increasing position, so the first node popped at
    generation ``n_target`` is the minimum. Uniforms are consumed in that
    order, independent of ``barrier``, which only decides when to stop.
    Returns (position or inf if censored, uniforms used, status) where status
    is DONE, NEED_UNIFORMS or NEED_CAPACITY.
    """
    size = _heap_push(keys, gens, 0, 0.0, 0)
    pos = 0
    nu = u.shape[0]
    cap = keys.shape[0]
    while size > 0:
        key, gen, size = _heap_pop(keys, gens, size)
        if key > barrier:
            return math.inf, pos, DONE
        if gen == n_target:
            return key, pos, DONE
        if pos >= nu:
            return math.nan, pos, NEED_UNIFORMS
        if size + 2 > cap:
            return math.nan, pos, NEED_CAPACITY
        child = key - math.log(1.0 - u[pos]) / beta
        pos += 1
        size = _heap_push(keys, gens, size, child, gen + 1)
        size = _heap_push(keys, gens, size, child, gen + 1)
    return math.inf, pos, DONE
