"""Exact finite-horizon law of the walk by exhaustive enumeration.

Small horizons only (at most 24 steps), but every number is exact up to
floating-point rounding, which makes this the ground truth for the tests.
Paths are stored implicitly: atom ``c`` of a horizon-``t`` law is the path
whose step ``k`` goes right iff bit ``k`` of ``c`` is set.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import engine as _engine
from .profile import CookieProfile

MAX_HORIZON = 24


@dataclass
class PathLaw:
    horizon: int
    probs: np.ndarray
    profile: CookieProfile

    def __len__(self) -> int:
        return len(self.probs)

    def positions(self) -> np.ndarray:
        """All paths as a ``(2**t, t + 1)`` array of positions."""
        return code_positions(self.horizon, np.arange(len(self.probs), dtype=np.int64))

    def atoms(self):
        pos = self.positions()
        for c, p in enumerate(self.probs):
            yield pos[c], float(p)

    def total(self) -> float:
        return float(np.sum(self.probs))


def code_positions(t: int, codes: np.ndarray) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(t, dtype=np.int64)) & 1
    out = np.zeros((len(codes), t + 1), dtype=np.int64)
    out[:, 1:] = np.cumsum(2 * bits - 1, axis=1)
    return out


def enumerate_paths(profile: CookieProfile, t: int, engine=None) -> PathLaw:
    """Every length-``t`` path with its exact probability."""
    if not 0 <= t <= MAX_HORIZON:
        raise ValueError(f"horizon must be in 0..{MAX_HORIZON}, got {t}")
    k = _engine.get(engine)
    probs = k.enumerate_probs(profile.cookie_probs, profile.tail_prob, int(t))
    return PathLaw(int(t), probs, profile)


def event_prob(law: PathLaw, predicate: Callable, vectorized: bool = False) -> float:
    """Probability of the set of paths satisfying ``predicate``.

    With ``vectorized=True`` the predicate gets the full position matrix and
    returns a boolean mask; otherwise it is called once per path.
    """
    if vectorized:
        mask = np.asarray(predicate(law.positions()), dtype=bool)
        return float(np.sum(law.probs[mask]))
    return float(sum(p for path, p in law.atoms() if predicate(path)))


def expectation(law: PathLaw, functional: Callable, vectorized: bool = False) -> float:
    if vectorized:
        values = np.asarray(functional(law.positions()), dtype=np.float64)
        return float(np.dot(law.probs, values))
    return float(sum(p * functional(path) for path, p in law.atoms()))


def position_law(law: PathLaw, time: int | None = None) -> dict[int, float]:
    """Exact law of ``X_time`` (default: the horizon)."""
    time = law.horizon if time is None else time
    values = law.positions()[:, time]
    out: dict[int, float] = defaultdict(float)
    for v, p in zip(values.tolist(), law.probs.tolist()):
        out[v] += p
    return dict(sorted(out.items()))


# --- vectorised path functionals --------------------------------------------


def first_hits(positions: np.ndarray, level: int) -> np.ndarray:
    """First hitting time of ``level`` per path; ``-1`` if not hit."""
    hit = positions == level
    any_hit = hit.any(axis=1)
    return np.where(any_hit, hit.argmax(axis=1), -1)


def hit_before(positions: np.ndarray, z: int, x: int, t: int) -> np.ndarray:
    """Mask of paths with ``T_z <= min(T_x, t)``; unreached levels count as infinite."""
    big = np.iinfo(np.int64).max
    tz = first_hits(positions, z)
    tx = first_hits(positions, x)
    tz = np.where(tz < 0, big, tz)
    tx = np.where(tx < 0, big, tx)
    return tz <= np.minimum(tx, t)


def martingale_paths(profile: CookieProfile, positions: np.ndarray) -> np.ndarray:
    """``R_n = X^-_n - D^-_n`` for every path (rows) and time (columns)."""
    n_paths, width = positions.shape
    t = width - 1
    table = np.array([2.0 * p - 1.0 for p in profile.cookie_probs] + [2.0 * profile.tail_prob - 1.0])
    visits = np.zeros((n_paths, 2 * t + 1), dtype=np.int64)
    rows = np.arange(n_paths)
    visits[:, t] = 1
    r = np.zeros((n_paths, width), dtype=np.float64)
    for s in range(t):
        x = positions[:, s]
        idx = np.minimum(visits[rows, x + t], profile.M + 1) - 1
        incr = positions[:, s + 1] - x
        on_left = x <= 0
        r[:, s + 1] = r[:, s] + np.where(on_left, incr - table[idx], 0.0)
        visits[rows, positions[:, s + 1] + t] += 1
    return r


def conditional_increments(profile: CookieProfile, n: int, engine=None) -> np.ndarray:
    """``E[R_{n+1} - R_n | X_0..X_n]`` for every one of the ``2**n`` prefixes.

    Each entry is a ratio of sub-sums over the two one-step extensions.
    """
    law = enumerate_paths(profile, n + 1, engine=engine)
    r = martingale_paths(profile, law.positions())
    incr = r[:, n + 1] - r[:, n]
    half = 1 << n
    p_left, p_right = law.probs[:half], law.probs[half:]
    return (p_left * incr[:half] + p_right * incr[half:]) / (p_left + p_right)


# --- backtrack vector law ---------------------------------------------------


@dataclass
class BacktrackLaw:
    """Censored law of ``(U^n_n, ..., U^0_n)`` over paths with ``T_n <= t_cap``."""

    n: int
    t_cap: int
    law: dict[tuple[int, ...], float]
    missing_mass: float

    @property
    def assigned_mass(self) -> float:
        return float(sum(self.law.values()))


def joint_backtrack_law(profile: CookieProfile, n: int, t_cap: int) -> BacktrackLaw:
    """Exact sub-probability law of the backtrack vector up to ``t_cap`` steps.

    Forward dynamic programming over states (position, capped visit counts,
    left-step counts at sites ``0..n-1``).  Visit counts beyond the cookie
    stack are capped at ``M + 1`` since only the tail matters after that,
    which merges paths without changing any probability.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 <= t_cap <= MAX_HORIZON:
        raise ValueError(f"t_cap must be in 0..{MAX_HORIZON}")
    m = profile.M
    cap = m + 1
    probs = list(profile.cookie_probs)
    q = profile.tail_prob
    lo = -t_cap
    width = n - lo + 1

    def idx(x):
        return x - lo

    start_visits = [0] * width
    start_visits[idx(0)] = 1
    states: dict[tuple, float] = {(0, tuple(start_visits), (0,) * n): 1.0}
    law: dict[tuple[int, ...], float] = defaultdict(float)

    for _ in range(t_cap):
        nxt: dict[tuple, float] = defaultdict(float)
        for (x, visits, back), prob in states.items():
            i = visits[idx(x)]
            p = probs[i - 1] if i <= m else q
            for y, py in ((x + 1, p), (x - 1, 1.0 - p)):
                w = prob * py
                if y == n:
                    # (U^n_n, U^{n-1}_n, ..., U^0_n); U^n_n is always 0
                    law[(0,) + tuple(reversed(back))] += w
                    continue
                vl = list(visits)
                vl[idx(y)] = min(vl[idx(y)] + 1, cap)
                if y < x and 0 <= x < n:
                    bl = list(back)
                    bl[x] += 1
                    new_back = tuple(bl)
                else:
                    new_back = back
                nxt[(y, tuple(vl), new_back)] += w
        states = nxt
    missing = float(sum(states.values()))
    return BacktrackLaw(n, t_cap, dict(law), missing)
