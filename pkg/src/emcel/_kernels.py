"""Batch chain simulation.

Paths advance in lockstep inside chunks of ``CHUNK`` lanes; finished lanes are
compacted away so the per-step loops stay dense and vectorisable. The step of
a lane is evaluated by the scheme's compiled ``bulk`` function and, where its
``easy`` predicate fails, by ``full``. Results per path are a status code, the
step index of the event and the last value.
"""

import math

import numba as nb
import numpy as np

from . import _rng
from .errors import SchemeIntegrityError

# the bundled TBB is too old for numba; prefer OpenMP without the warning
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

CHUNK = 512

CENSORED = 0
LOWER = 1
UPPER = 2
FROZEN = 3
ESCAPED = 4

# relative distance within which a landing point is identified with a boundary
SNAP = 4.0 * np.finfo(float).eps

_RUNNERS = {}


def _snap_width(b):
    return SNAP * max(1.0, abs(b)) if math.isfinite(b) else 0.0


def _make_runner(full, bulk, easy):
    has_bulk = bulk is not None
    has_easy = easy is not None
    if bulk is None:
        bulk = full
    if easy is None:
        easy = full

    @nb.njit(error_model="numpy")
    def run_chunk(y0, h, l, r, tol_l, tol_r, inc_l, inc_r, n_steps, seeds, prm, status, steps, final):
        n = seeds.size
        y = np.empty(n)
        idx = np.empty(n, np.int64)
        word = np.empty(n, np.uint64)
        a = np.empty(n)
        hard = np.empty(n, np.int64)
        for j in range(n):
            y[j] = y0
            idx[j] = j
        m = n
        k = 0
        while m > 0 and k < n_steps:
            if (k & 63) == 0:
                blk = np.uint64(k >> 6)
                for j in range(m):
                    word[j] = _rng.nb_coin_word(seeds[idx[j]], blk)
            if has_bulk:
                nh = 0
                for j in range(m):
                    a[j] = bulk(y[j], h, prm)
                    if has_easy:
                        nh += not easy(y[j], h, prm)
                if has_easy:
                    if nh > 0:
                        nh = 0
                        for j in range(m):
                            if not easy(y[j], h, prm):
                                hard[nh] = j
                                nh += 1
                    for q in range(nh):
                        j = hard[q]
                        a[j] = full(y[j], h, prm)
            else:
                for j in range(m):
                    a[j] = full(y[j], h, prm)
            sh = np.uint64(k & 63)
            for j in range(m):
                up = (word[j] >> sh) & np.uint64(1)
                y[j] = y[j] + a[j] if up else y[j] - a[j]
            # cheap vectorisable test first; most steps finish no lane
            n_ev = 0
            for j in range(m):
                n_ev += (a[j] == 0.0) | (y[j] <= l + tol_l) | (y[j] >= r - tol_r)
            j = 0 if n_ev > 0 else m
            while j < m:
                yj = y[j]
                code = -1
                if a[j] == 0.0:
                    code = FROZEN
                    step = k
                elif yj <= l + tol_l:
                    if yj < l - tol_l or not inc_l:
                        code = ESCAPED
                    else:
                        code = LOWER
                        yj = l
                    step = k + 1
                elif yj >= r - tol_r:
                    if yj > r + tol_r or not inc_r:
                        code = ESCAPED
                    else:
                        code = UPPER
                        yj = r
                    step = k + 1
                if code >= 0:
                    p = idx[j]
                    status[p] = code
                    steps[p] = step
                    final[p] = yj
                    m -= 1
                    y[j] = y[m]
                    a[j] = a[m]
                    idx[j] = idx[m]
                    word[j] = word[m]
                else:
                    j += 1
            k += 1
        for j in range(m):
            p = idx[j]
            status[p] = CENSORED
            steps[p] = k
            final[p] = y[j]

    @nb.njit(parallel=True, error_model="numpy")
    def run(y0, h, l, r, tol_l, tol_r, inc_l, inc_r, n_steps, seeds, prm, status, steps, final):
        n = seeds.size
        n_chunks = (n + CHUNK - 1) // CHUNK
        for c in nb.prange(n_chunks):
            lo = c * CHUNK
            hi = min(n, lo + CHUNK)
            run_chunk(y0, h, l, r, tol_l, tol_r, inc_l, inc_r, n_steps, seeds[lo:hi], prm,
                      status[lo:hi], steps[lo:hi], final[lo:hi])

    return run


def _runner(spec):
    key = (spec.full, spec.bulk, spec.easy)
    fn = _RUNNERS.get(key)
    if fn is None:
        fn = _RUNNERS[key] = _make_runner(spec.full, spec.bulk, spec.easy)
    return fn


def simulate_batch(scheme, y0, h, n_steps, seeds):
    """Simulate one path per seed for at most ``n_steps`` steps.

    Returns ``(status, steps, final)`` arrays. ``steps`` is the index of the
    absorbing step (the path sits on the boundary from ``steps * h`` on), the
    step at which the path froze, or ``n_steps`` for censored paths.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    n = seeds.size
    status = np.empty(n, np.int8)
    steps = np.empty(n, np.int64)
    final = np.empty(n)
    space = scheme.space
    l, r = float(space.l), float(space.r)
    # an excluded finite endpoint is never landed on legally
    tol_l = _snap_width(l) if space.include_l else 0.0
    tol_r = _snap_width(r) if space.include_r else 0.0
    spec = scheme.jit_spec(h)
    if spec is not None:
        _runner(spec)(float(y0), float(h), l, r, tol_l, tol_r, space.include_l, space.include_r,
                      int(n_steps), seeds,
                      np.ascontiguousarray(spec.params, dtype=float), status, steps, final)
    else:
        _simulate_numpy(scheme, y0, h, n_steps, seeds, tol_l, tol_r, status, steps, final)
    bad = np.flatnonzero(status == ESCAPED)
    if bad.size or np.any(np.isnan(final)):
        i = int(bad[0]) if bad.size else int(np.flatnonzero(np.isnan(final))[0])
        raise SchemeIntegrityError(
            f"path {i} left the state space at step {int(steps[i])} (value {final[i]!r})"
        )
    return status, steps, final


def _simulate_numpy(scheme, y0, h, n_steps, seeds, tol_l, tol_r, status, steps, final):
    l, r = float(scheme.space.l), float(scheme.space.r)
    y = np.full(seeds.size, float(y0))
    live = np.arange(seeds.size)
    word = np.zeros(seeds.size, np.uint64)
    k = 0
    while live.size and k < n_steps:
        if (k & 63) == 0:
            word = _rng.coin_words(seeds[live], k >> 6)
        a = scheme.scale_array(y, h)
        bit = (word >> np.uint64(k & 63)) & np.uint64(1)
        y = y + (bit.astype(float) * 2.0 - 1.0) * a
        code = np.full(live.size, -1, np.int8)
        step = np.full(live.size, k + 1, np.int64)
        frozen = a == 0.0
        low = ~frozen & (y <= l + tol_l)
        up = ~frozen & ~low & (y >= r - tol_r)
        code[low] = LOWER
        code[low & ((y < l - tol_l) | (not scheme.space.include_l))] = ESCAPED
        code[up] = UPPER
        code[up & ((y > r + tol_r) | (not scheme.space.include_r))] = ESCAPED
        code[frozen] = FROZEN
        step[frozen] = k
        y[code == LOWER] = l
        y[code == UPPER] = r
        done = code >= 0
        status[live[done]] = code[done]
        steps[live[done]] = step[done]
        final[live[done]] = y[done]
        live, y, word = live[~done], y[~done], word[~done]
        k += 1
    status[live] = CENSORED
    steps[live] = k
    final[live] = y
