# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; behaviourally identical to ``_pyengine``.

Visit counts live in a dense buffer that grows (doubling) whenever the walk
leaves the covered window, which is equivalent to the sparse dict used by
the Python engine.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, log
from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport calloc, free
from libc.string cimport memcpy

cnp.import_array()

NAME = "cython"
NO_LOWER = -(1 << 62)
NO_UPPER = 1 << 62

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t REPLICA_MULT = 0xD1B54A32D192ED03ULL
cdef uint64_t SEED_SALT = 0x5851F42D4C957F2DULL
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t replica) noexcept nogil:
    return mix64(mix64(seed ^ SEED_SALT) ^ (replica * REPLICA_MULT))


cdef inline double next_uniform(uint64_t* state) noexcept nogil:
    state[0] = state[0] + GOLDEN
    return <double>(mix64(state[0]) >> 11) * INV_2_53


cdef struct Visits:
    int64_t* data
    int64_t lo
    int64_t size


cdef int visits_init(Visits* v, int64_t size) noexcept nogil:
    v.size = size
    v.lo = -(size // 2)
    v.data = <int64_t*> calloc(size, sizeof(int64_t))
    return 0 if v.data != NULL else -1


cdef void visits_clear(Visits* v, int64_t a, int64_t b) noexcept nogil:
    # zero sites a..b; cheaper than wiping a buffer grown by a long replica
    cdef int64_t k
    for k in range(a - v.lo, b - v.lo + 1):
        v.data[k] = 0


cdef inline int64_t visits_get(Visits* v, int64_t x) noexcept nogil:
    cdef int64_t k = x - v.lo
    if k < 0 or k >= v.size:
        return 0
    return v.data[k]


cdef int visits_inc(Visits* v, int64_t x) noexcept nogil:
    # the walk moves by one, so x is at most one site outside the window
    cdef int64_t k = x - v.lo
    cdef int64_t new_lo
    cdef int64_t* new_data
    if k < 0 or k >= v.size:
        new_lo = v.lo - v.size if k < 0 else v.lo
        new_data = <int64_t*> calloc(2 * v.size, sizeof(int64_t))
        if new_data == NULL:
            return -1
        memcpy(new_data + (v.lo - new_lo), v.data, v.size * sizeof(int64_t))
        free(v.data)
        v.data = new_data
        v.lo = new_lo
        v.size = 2 * v.size
        k = x - v.lo
    v.data[k] += 1
    return 0


cdef double[::1] _as_probs(cookies):
    return np.ascontiguousarray(np.asarray(cookies, dtype=np.float64).reshape(-1))


def run_path(cookies, double tail, key, int64_t max_steps, int64_t lower, int64_t upper):
    cdef double[::1] probs = _as_probs(cookies)
    cdef Py_ssize_t m = probs.shape[0]
    cdef uint64_t state = <uint64_t>(int(key) & 0xFFFFFFFFFFFFFFFF)
    cdef Visits vis
    cdef int64_t x = 0, t = 0, i
    cdef double p, u
    cdef bint hit = False
    cdef list out_chunks = []
    cdef cnp.ndarray[int64_t, ndim=1] buf
    cdef int64_t cap = 4096
    cdef int64_t fill = 1

    if visits_init(&vis, 1024) < 0:
        raise MemoryError()
    try:
        buf = np.empty(cap, dtype=np.int64)
        buf[0] = 0
        vis.data[0 - vis.lo] = 1
        if x <= lower or x >= upper:
            return buf[:1].copy(), True
        while t < max_steps:
            i = visits_get(&vis, x)
            p = probs[i - 1] if i <= m else tail
            u = next_uniform(&state)
            if u < p:
                x += 1
            else:
                x -= 1
            if visits_inc(&vis, x) < 0:
                raise MemoryError()
            t += 1
            if fill == cap:
                out_chunks.append(buf)
                buf = np.empty(cap, dtype=np.int64)
                fill = 0
            buf[fill] = x
            fill += 1
            if x <= lower or x >= upper:
                hit = True
                break
        out_chunks.append(buf[:fill])
        return np.concatenate(out_chunks), hit
    finally:
        free(vis.data)


def run_batch(cookies, double tail, uint64_t seed, uint64_t replica0, Py_ssize_t n,
              int64_t max_steps, int64_t lower, int64_t upper, Py_ssize_t track_k=0):
    cdef double[::1] probs = _as_probs(cookies)
    cdef Py_ssize_t m = probs.shape[0]
    cdef double[::1] drifts = np.array([2.0 * probs[k] - 1.0 for k in range(m)], dtype=np.float64).reshape(-1)
    cdef double qdrift = 2.0 * tail - 1.0

    final_x_a = np.zeros(n, dtype=np.int64)
    steps_a = np.zeros(n, dtype=np.int64)
    hit_a = np.zeros(n, dtype=np.uint8)
    d_minus_a = np.zeros(n, dtype=np.float64)
    v_count_a = np.zeros(n, dtype=np.int64)
    d0_a = np.zeros(n, dtype=np.float64)
    max_x_a = np.zeros(n, dtype=np.int64)
    d0_hits_a = np.full((n, track_k + 1), np.nan, dtype=np.float64)
    cdef int64_t[::1] final_x = final_x_a
    cdef int64_t[::1] steps = steps_a
    cdef unsigned char[::1] hit = hit_a
    cdef double[::1] d_minus = d_minus_a
    cdef int64_t[::1] v_count = v_count_a
    cdef double[::1] d0 = d0_a
    cdef int64_t[::1] max_x = max_x_a
    cdef double[:, ::1] d0_hits = d0_hits_a

    cdef Visits vis
    cdef Py_ssize_t r
    cdef uint64_t state
    cdef int64_t x, xmax, xmin, v, t, i
    cdef double dm, dz, p, dr, u
    cdef bint stopped
    cdef int err = 0

    if visits_init(&vis, 1024) < 0:
        raise MemoryError()
    with nogil:
        for r in range(n):
            state = stream_key(seed, replica0 + <uint64_t>r)
            visits_inc(&vis, 0)
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
                i = visits_get(&vis, x)
                if i <= m:
                    p = probs[i - 1]
                    dr = drifts[i - 1]
                else:
                    p = tail
                    dr = qdrift
                u = next_uniform(&state)
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
                if visits_inc(&vis, x) < 0:
                    err = 1
                    break
                t += 1
                stopped = x <= lower or x >= upper
            if err:
                break
            visits_clear(&vis, xmin, xmax)
            final_x[r] = x
            steps[r] = t
            hit[r] = stopped
            d_minus[r] = dm
            v_count[r] = v
            d0[r] = dz
            max_x[r] = xmax
    free(vis.data)
    if err:
        raise MemoryError()
    return {
        "final_x": final_x_a,
        "steps": steps_a,
        "hit": hit_a.astype(bool),
        "d_minus": d_minus_a,
        "v_count": v_count_a,
        "d0": d0_a,
        "max_x": max_x_a,
        "d0_hits": d0_hits_a,
    }


def paths_matrix(cookies, double tail, uint64_t seed, uint64_t replica0, Py_ssize_t n, Py_ssize_t t):
    cdef double[::1] probs = _as_probs(cookies)
    cdef Py_ssize_t m = probs.shape[0]
    out_a = np.zeros((n, t + 1), dtype=np.int64)
    cdef int64_t[:, ::1] out = out_a
    cdef int64_t* visits = <int64_t*> calloc(2 * t + 1, sizeof(int64_t))
    cdef Py_ssize_t r, s, k
    cdef uint64_t state
    cdef int64_t x, i
    cdef double p, u
    if visits == NULL:
        raise MemoryError()
    with nogil:
        for r in range(n):
            state = stream_key(seed, replica0 + <uint64_t>r)
            for k in range(2 * t + 1):
                visits[k] = 0
            visits[t] = 1
            x = 0
            for s in range(t):
                i = visits[x + t]
                p = probs[i - 1] if i <= m else tail
                u = next_uniform(&state)
                if u < p:
                    x += 1
                else:
                    x -= 1
                visits[x + t] += 1
                out[r, s + 1] = x
    free(visits)
    return out_a


def sample_a(cookies, double tail, int64_t j, uint64_t seed, uint64_t draw0, Py_ssize_t n, bint decomposed):
    cdef double[::1] probs = _as_probs(cookies)
    cdef Py_ssize_t m = probs.shape[0]
    cdef double log1mq = log(1.0 - tail)
    out_a = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] out = out_a
    cdef bint split = decomposed and j >= m - 1
    cdef int64_t needed = m if split else j + 1
    cdef Py_ssize_t r
    cdef int64_t succ, fail, i, g
    cdef uint64_t state
    cdef double p, u
    with nogil:
        for r in range(n):
            state = stream_key(seed, draw0 + <uint64_t>r)
            succ = 0
            fail = 0
            i = 0
            while succ < needed:
                i += 1
                p = probs[i - 1] if i <= m else tail
                u = next_uniform(&state)
                if u < p:
                    succ += 1
                else:
                    fail += 1
            if split:
                for g in range(j - m + 1):
                    u = next_uniform(&state)
                    fail += <int64_t>floor(log(1.0 - u) / log1mq)
            out[r] = fail
    return out_a


cdef void _dfs(int depth, int t, int64_t x, int64_t code, double prob,
               double* probs, Py_ssize_t m, double tail,
               int64_t* visits, double* out) noexcept nogil:
    cdef int64_t i
    cdef double p
    if depth == t:
        out[code] = prob
        return
    i = visits[x + t]
    p = probs[i - 1] if i <= m else tail
    visits[x + t + 1] += 1
    _dfs(depth + 1, t, x + 1, code | (<int64_t>1 << depth), prob * p, probs, m, tail, visits, out)
    visits[x + t + 1] -= 1
    visits[x + t - 1] += 1
    _dfs(depth + 1, t, x - 1, code, prob * (1.0 - p), probs, m, tail, visits, out)
    visits[x + t - 1] -= 1


def enumerate_probs(cookies, double tail, int t):
    cdef double[::1] probs = _as_probs(cookies)
    cdef Py_ssize_t m = probs.shape[0]
    out_a = np.zeros(<Py_ssize_t>1 << t, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef int64_t* visits = <int64_t*> calloc(2 * t + 1, sizeof(int64_t))
    cdef double dummy = 0.0
    cdef double* pptr = &probs[0] if m > 0 else &dummy
    if visits == NULL:
        raise MemoryError()
    visits[t] = 1
    with nogil:
        _dfs(0, t, 0, 0, 1.0, pptr, m, tail, visits, &out[0])
    free(visits)
    return out_a
