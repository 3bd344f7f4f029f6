"""Branching process with migration behind the backtrack counts.

``A_j`` is the number of failures before the ``(j + 1)``-th success in
independent Bernoulli trials whose ``i``-th success probability is the
``i``-th cookie (then the tail ``q``).  The chain ``Z`` jumps from ``j`` to
``k`` with probability ``P[A_j = k]``.

Geometric variables count failures before the first success:
``P[xi = k] = q (1 - q)**k`` for ``k >= 0``.  For ``M = 0`` we use the
convention ``A_{-1} = 0`` so that ``A_j = A_{M-1} + xi_1 + ... + xi_{j-M+1}``
holds for every profile.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import nbinom

from . import engine as _engine
from .profile import CookieProfile, prob_at
from .rng import Stream

#: Slack added to computed tails so they bound the exact tail despite rounding.
ROUNDING_SLACK = 1e-14
PGF_TAIL_TOL = 1e-12


class StationaryNotConverged(RuntimeError):
    pass


# --- law of A_j -------------------------------------------------------------


def _prefix_split(profile: CookieProfile, j: int):
    """Run the cookie trials exactly.

    Returns ``absorbed`` (failures -> prob, for runs that collected ``j + 1``
    successes inside the stack) and ``pending`` ((successes still needed,
    failures so far) -> prob) for runs that continue with the tail.
    """
    need = j + 1
    live = {(0, 0): 1.0}
    absorbed: dict[int, float] = {}
    for p in profile.cookie_probs:
        nxt: dict[tuple[int, int], float] = {}
        for (s, f), w in live.items():
            if s + 1 == need:
                absorbed[f] = absorbed.get(f, 0.0) + w * p
            else:
                nxt[(s + 1, f)] = nxt.get((s + 1, f), 0.0) + w * p
            nxt[(s, f + 1)] = nxt.get((s, f + 1), 0.0) + w * (1.0 - p)
        live = nxt
    pending = {(need - s, f): w for (s, f), w in live.items()}
    return absorbed, pending


def pmf_A(profile: CookieProfile, j: int, k_max: int) -> tuple[np.ndarray, float]:
    """Exact ``P[A_j = k]`` for ``k = 0..k_max`` and a bound on ``P[A_j > k_max]``."""
    if j < 0 or k_max < 0:
        raise ValueError("need j >= 0 and k_max >= 0")
    q = profile.tail_prob
    absorbed, pending = _prefix_split(profile, j)
    ks = np.arange(k_max + 1)
    pmf = np.zeros(k_max + 1)
    tail = 0.0
    for f, w in absorbed.items():
        if f <= k_max:
            pmf[f] += w
        else:
            tail += w
    for (r, f), w in pending.items():
        if f <= k_max:
            pmf[f:] += w * nbinom.pmf(ks[: k_max + 1 - f], r, q)
            tail += w * float(nbinom.sf(k_max - f, r, q))
        else:
            tail += w
    return pmf, min(1.0, tail + ROUNDING_SLACK)


def mean_A(profile: CookieProfile, j: int) -> float:
    absorbed, pending = _prefix_split(profile, j)
    q = profile.tail_prob
    total = sum(f * w for f, w in absorbed.items())
    total += sum(w * (f + r * (1.0 - q) / q) for (r, f), w in pending.items())
    return total


def sample_A(profile: CookieProfile, j: int, rng) -> int:
    """One draw of ``A_j`` straight from the Bernoulli construction.

    ``rng`` is anything with a ``uniform()`` method (e.g. :class:`Stream`).
    """
    if j < 0:
        raise ValueError("j must be nonnegative")
    succ = fail = 0
    i = 0
    while succ <= j:
        i += 1
        if rng.uniform() < prob_at(profile, i):
            succ += 1
        else:
            fail += 1
    return fail


def sample_A_decomposed(profile: CookieProfile, j: int, rng) -> int:
    """``A_{M-1}`` plus ``j - M + 1`` independent geometric(q) draws (``j >= M - 1``)."""
    m = profile.M
    if j < m - 1:
        raise ValueError("the decomposition needs j >= M - 1")
    base = sample_A(profile, m - 1, rng) if m >= 1 else 0
    log1mq = math.log(1.0 - profile.tail_prob)
    for _ in range(j - m + 1):
        base += int(math.floor(math.log(1.0 - rng.uniform()) / log1mq))
    return base


def sample_A_batch(
    profile: CookieProfile, j: int, n: int, seed: int = 0, route: str = "direct", draw0: int = 0, engine=None
) -> np.ndarray:
    """``n`` draws of ``A_j``; ``route`` is ``"direct"`` or ``"decomposed"``."""
    if route not in ("direct", "decomposed"):
        raise ValueError(f"unknown route {route!r}")
    if route == "decomposed" and j < profile.M - 1:
        raise ValueError("the decomposition needs j >= M - 1")
    k = _engine.get(engine)
    return k.sample_a(profile.cookie_probs, profile.tail_prob, j, seed, draw0, n, route == "decomposed")


# --- kernel and stationary law --------------------------------------------


@dataclass
class MigrationKernel:
    profile: CookieProfile
    N: int
    entries: np.ndarray
    row_deficits: np.ndarray


def build_kernel(profile: CookieProfile, N: int) -> MigrationKernel:
    """Truncated transition matrix ``entries[j, k] = P[A_j = k]``, ``j, k <= N``."""
    if N < profile.M + 2:
        raise ValueError(f"truncation N={N} must be at least M + 2 = {profile.M + 2}")
    entries = np.zeros((N + 1, N + 1))
    deficits = np.zeros(N + 1)
    for j in range(N + 1):
        row, _ = pmf_A(profile, j, N)
        entries[j] = row
        deficits[j] = max(0.0, 1.0 - row.sum())
    return MigrationKernel(profile, N, entries, deficits)


@dataclass
class StationaryLaw:
    pmf: np.ndarray
    residual: float
    iterations: int
    leak: float

    def moment(self, order: int) -> float:
        k = np.arange(len(self.pmf), dtype=np.float64)
        return float(np.dot(self.pmf, k**order))


def stationary(kernel: MigrationKernel, tol: float = 1e-12, max_iter: int = 10**6) -> StationaryLaw:
    """Fixed point of the truncated kernel by normalised power iteration.

    ``leak`` is the mass one step of the truncated chain loses from the
    fixed point, a direct measure of the truncation error.
    """
    K = kernel.entries
    pi = np.zeros(kernel.N + 1)
    pi[0] = 1.0
    residual = math.inf
    for it in range(1, max_iter + 1):
        nxt = pi @ K
        total = nxt.sum()
        if total <= 0.0:
            raise StationaryNotConverged("all mass escaped the truncation window")
        nxt /= total
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < tol:
            return StationaryLaw(pi, residual, it, float(np.dot(pi, kernel.row_deficits)))
    raise StationaryNotConverged(f"no convergence after {max_iter} iterations (residual {residual:.3g})")


def simulate_z(profile: CookieProfile, z0: int, steps: int, seed: int = 0, replica: int = 0) -> np.ndarray:
    """A path of the chain from the Bernoulli construction (no truncation)."""
    rng = Stream(seed, replica)
    out = np.empty(steps + 1, dtype=np.int64)
    out[0] = z = z0
    for n in range(steps):
        z = sample_A(profile, z, rng)
        out[n + 1] = z
    return out


def z_joint_law(kernel: MigrationKernel, vectors, z0_law: dict[int, float], n: int):
    """Probabilities of given ``(Z_0..Z_n)`` vectors, plus the truncation error.

    The truncation error is the exact mass of chain paths that leave
    ``0..N`` within ``n`` steps, obtained by propagating the marginal.
    """
    K = kernel.entries
    probs = {}
    for v in vectors:
        if any(x > kernel.N for x in v):
            probs[v] = 0.0
            continue
        p = z0_law.get(v[0], 0.0)
        for a, b in zip(v[:-1], v[1:]):
            p *= K[a, b]
        probs[v] = p
    dist = np.zeros(kernel.N + 1)
    for z, w in z0_law.items():
        if z <= kernel.N:
            dist[z] += w
    lost = 1.0 - dist.sum()
    for _ in range(n):
        lost += float(np.dot(dist, kernel.row_deficits))
        dist = dist @ K
    return probs, lost


# --- generating functions and the functional equation -------------------


def gen_fn(pmf, s: float) -> float:
    """``sum_k pmf[k] s**k``."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    return float(np.polynomial.polynomial.polyval(s, np.asarray(pmf, dtype=np.float64)))


@lru_cache(maxsize=512)
def _pmf_A_full(profile: CookieProfile, j: int) -> tuple[np.ndarray, float]:
    q = profile.tail_prob
    sd = math.sqrt((j + 1) * (1.0 - q)) / q
    k_max = int(mean_A(profile, j) + 20 * sd + 40)
    while True:
        pmf, tail = pmf_A(profile, j, k_max)
        if tail < PGF_TAIL_TOL:
            return pmf, tail
        k_max *= 2


def pgf_A(profile: CookieProfile, j: int, s: float) -> float:
    """``E[s**A_j]`` with error below ``PGF_TAIL_TOL`` (``A_{-1} = 0``)."""
    if j == -1:
        return 1.0
    pmf, _ = _pmf_A_full(profile, j)
    return gen_fn(pmf, s)


def geometric_pgf(q: float, s: float) -> float:
    return q / (1.0 - (1.0 - q) * s)


def coeff_a(profile: CookieProfile, s: float) -> float:
    q, m = profile.tail_prob, profile.M
    ratio = (1.0 - (1.0 - q) * s) / q
    return 1.0 / (pgf_A(profile, m - 1, s) * ratio ** (m - 1))


def coeff_b(profile: CookieProfile, s: float, low_pmf) -> float:
    """``low_pmf[k]`` is ``P[Z_inf = k]``; only ``k <= M - 2`` is used."""
    q, m = profile.tail_prob, profile.M
    a = coeff_a(profile, s)
    ratio = (1.0 - (1.0 - q) * s) / q
    base = pgf_A(profile, m - 1, s)
    total = 0.0
    for k in range(0, m - 1):
        total += low_pmf[k] * (pgf_A(profile, k, s) - base * ratio ** (m - 1 - k))
    return 1.0 - a + a * total


@dataclass
class ResidualRow:
    s: float
    lhs: float
    rhs: float
    residual: float


def functional_terms(profile: CookieProfile, pmf, s: float) -> ResidualRow:
    q = profile.tail_prob
    lhs = 1.0 - gen_fn(pmf, geometric_pgf(q, s))
    rhs = coeff_a(profile, s) * (1.0 - gen_fn(pmf, s)) + coeff_b(profile, s, pmf)
    return ResidualRow(s, lhs, rhs, abs(lhs - rhs))


def functional_residual(profile: CookieProfile, pmf, s: float) -> float:
    return functional_terms(profile, pmf, s).residual


def residual_sweep(profile: CookieProfile, pmf, grid=(0.0, 0.25, 0.5, 0.75, 1.0)) -> list[ResidualRow]:
    return [functional_terms(profile, pmf, s) for s in grid]


def moment_probe(profile: CookieProfile, Ns=(50, 100, 200), order: int = 4, tol: float = 1e-12):
    """``order``-th moment of the truncated fixed point for each truncation.

    Stabilises when the chain is positive recurrent; grows with ``N`` when
    the chain is supercritical (tail below 1/2) and mass piles up at the
    truncation boundary.
    """
    out = []
    for N in Ns:
        law = stationary(build_kernel(profile, N), tol=tol)
        out.append((N, law.moment(order), law.leak))
    return out
