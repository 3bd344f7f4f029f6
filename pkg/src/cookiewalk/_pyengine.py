"""Pure-Python kernels.

Reference implementation of every hot loop.  The compiled engine in
``_cengine.pyx`` must agree with these functions bit for bit, so any
change here has to be mirrored there (``tests/test_engine_parity.py``
guards this).

Shared conventions:

* the visit at time 0 counts, so the first step from a site uses ``p_1``;
* drift sums only include steps already taken (cookies consumed);
* level arguments equal to ``NO_LOWER`` / ``NO_UPPER`` disable that side.
"""

from __future__ import annotations

import math
import sys

import numpy as np

from .rng import GOLDEN, INV_2_53, MASK64, mix64, stream_key

NAME = "python"
NO_LOWER = -(1 << 62)
NO_UPPER = 1 << 62


def _tables(cookies, tail):
    probs = [float(p) for p in cookies]
    drifts = [2.0 * p - 1.0 for p in probs]
    return probs, drifts, len(probs), float(tail), 2.0 * float(tail) - 1.0


def run_path(cookies, tail, key, max_steps, lower, upper, uniforms=None):
    """Simulate one path; return ``(positions, hit)``.

    ``hit`` is True when a level stopped the walk before ``max_steps``.
    ``uniforms`` replaces the stream by an explicit sequence (tests only).
    """
    probs, _, m, q, _ = _tables(cookies, tail)
    state = key & MASK64
    visits = {0: 1}
    x = 0
    path = [0]
    if x <= lower or x >= upper:
        return np.array(path, dtype=np.int64), True
    for t in range(max_steps):
        i = visits[x]
        p = probs[i - 1] if i <= m else q
        if uniforms is None:
            state = (state + GOLDEN) & MASK64
            u = (mix64(state) >> 11) * INV_2_53
        else:
            u = uniforms[t]
        x = x + 1 if u < p else x - 1
        visits[x] = visits.get(x, 0) + 1
        path.append(x)
        if x <= lower or x >= upper:
            return np.array(path, dtype=np.int64), True
    return np.array(path, dtype=np.int64), False


def run_batch(cookies, tail, seed, replica0, n, max_steps, lower, upper, track_k=0):
    """Run ``n`` replicas and collect the per-replica walk statistics.

    Returns a dict of arrays keyed ``final_x, steps, hit, d_minus, v_count,
    d0, max_x, d0_hits``; ``d0_hits[r, k]`` is the origin drift at the first
    hit of ``-k`` (NaN if never reached) for ``k <= track_k``.
    """
    probs, drifts, m, q, qdrift = _tables(cookies, tail)
    final_x = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    hit = np.zeros(n, dtype=bool)
    d_minus = np.zeros(n, dtype=np.float64)
    v_count = np.zeros(n, dtype=np.int64)
    d0 = np.zeros(n, dtype=np.float64)
    max_x = np.zeros(n, dtype=np.int64)
    d0_hits = np.full((n, track_k + 1), np.nan, dtype=np.float64)

    for r in range(n):
        state = stream_key(seed, replica0 + r)
        visits = {0: 1}
        x = 0
        xmax = 0
        xmin = 0
        dm = 0.0
        dz = 0.0
        v = 0
        t = 0
        d0_hits[r, 0] = 0.0
        stopped = x <= lower or x >= upper
        while not stopped and t < max_steps:
            i = visits[x]
            if i <= m:
                p = probs[i - 1]
                dr = drifts[i - 1]
            else:
                p = q
                dr = qdrift
            state = (state + GOLDEN) & MASK64
            u = (mix64(state) >> 11) * INV_2_53
            if x <= 0:
                dm += dr
                if x == 0:
                    dz += dr
            if u < p:
                if x == 0:
                    v += 1
                x += 1
                if x > xmax:
                    xmax = x
            else:
                x -= 1
                if x < xmin:
                    xmin = x
                    if -x <= track_k:
                        d0_hits[r, -x] = dz
            visits[x] = visits.get(x, 0) + 1
            t += 1
            stopped = x <= lower or x >= upper
        final_x[r] = x
        steps[r] = t
        hit[r] = stopped
        d_minus[r] = dm
        v_count[r] = v
        d0[r] = dz
        max_x[r] = xmax
    return {
        "final_x": final_x,
        "steps": steps,
        "hit": hit,
        "d_minus": d_minus,
        "v_count": v_count,
        "d0": d0,
        "max_x": max_x,
        "d0_hits": d0_hits,
    }


def paths_matrix(cookies, tail, seed, replica0, n, t):
    """Positions ``X_0..X_t`` of ``n`` replicas as an ``(n, t + 1)`` array."""
    probs, _, m, q, _ = _tables(cookies, tail)
    out = np.zeros((n, t + 1), dtype=np.int64)
    for r in range(n):
        state = stream_key(seed, replica0 + r)
        visits = {0: 1}
        x = 0
        row = out[r]
        for s in range(t):
            i = visits[x]
            p = probs[i - 1] if i <= m else q
            state = (state + GOLDEN) & MASK64
            u = (mix64(state) >> 11) * INV_2_53
            x = x + 1 if u < p else x - 1
            visits[x] = visits.get(x, 0) + 1
            row[s + 1] = x
    return out


def sample_a(cookies, tail, j, seed, draw0, n, decomposed):
    """Draw ``n`` copies of A_j, one stream per draw.

    Direct route: Bernoulli trials with success probability ``p_i`` (then
    ``q``) until ``j + 1`` successes, counting failures.  Decomposed route
    (only differs when ``j >= M - 1``): A_{M-1} directly, plus ``j - M + 1``
    geometric(q) draws by inversion.
    """
    probs, _, m, q, _ = _tables(cookies, tail)
    log1mq = math.log(1.0 - q)
    out = np.zeros(n, dtype=np.int64)
    split = decomposed and j >= m - 1
    needed = m if split else j + 1
    for r in range(n):
        state = stream_key(seed, draw0 + r)
        succ = 0
        fail = 0
        i = 0
        while succ < needed:
            i += 1
            p = probs[i - 1] if i <= m else q
            state = (state + GOLDEN) & MASK64
            u = (mix64(state) >> 11) * INV_2_53
            if u < p:
                succ += 1
            else:
                fail += 1
        if split:
            for _ in range(j - m + 1):
                state = (state + GOLDEN) & MASK64
                u = (mix64(state) >> 11) * INV_2_53
                fail += int(math.floor(math.log(1.0 - u) / log1mq))
        out[r] = fail
    return out


def enumerate_probs(cookies, tail, t):
    """Exact probability of every length-``t`` path.

    Index bit ``k`` set means step ``k`` goes right.  Depth-first with a
    single visit-count table that is updated and undone in place.
    """
    probs, _, m, q, _ = _tables(cookies, tail)
    out = np.zeros(1 << t, dtype=np.float64)
    visits = [0] * (2 * t + 1)
    visits[t] = 1
    limit = sys.getrecursionlimit()
    if limit < 4 * t + 100:
        sys.setrecursionlimit(4 * t + 100)

    def dfs(depth, x, code, prob):
        if depth == t:
            out[code] = prob
            return
        i = visits[x + t]
        p = probs[i - 1] if i <= m else q
        visits[x + t + 1] += 1
        dfs(depth + 1, x + 1, code | (1 << depth), prob * p)
        visits[x + t + 1] -= 1
        visits[x + t - 1] += 1
        dfs(depth + 1, x - 1, code, prob * (1.0 - p))
        visits[x + t - 1] -= 1

    dfs(0, 0, 0, 1.0)
    return out
