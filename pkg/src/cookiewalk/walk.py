"""Simulation of the excited walk and the path functionals built on it.

Conventions used throughout:

* ``X_0 = 0`` and the presence at time 0 is the first visit to the origin,
  so the step taken at time ``n`` from site ``x`` uses the cookie whose
  index is the number of visits to ``x`` at times ``0..n``.
* Drift sums ``D^x_n`` add ``2 p_i - 1`` for every cookie already used,
  i.e. for the visits at times ``0..n-1``.  With this reading
  ``R_n = X^-_n - D^-_n`` is a martingale with ``R_0 = 0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import engine as _engine
from .profile import CookieProfile, prob_at
from .rng import Stream, stream_key

DEFAULT_STEP_CAP = 10**7
#: Replicas handed to one kernel call; fixed so results never depend on threads.
CHUNK = 4096


class NotHitError(ValueError):
    """The trajectory never reaches the requested level."""


# --- stopping rules -------------------------------------------------------


@dataclass(frozen=True)
class StopRule:
    """When to stop a run: a step cap plus optional lower/upper levels.

    ``censor_on_cap`` marks runs whose purpose is a hitting time; reaching
    the cap there produces a censored trajectory instead of a normal end.
    """

    max_steps: int
    lower: int | None = None
    upper: int | None = None
    censor_on_cap: bool = False

    @classmethod
    def max_steps_rule(cls, t: int) -> "StopRule":
        if t < 0:
            raise ValueError("max_steps must be nonnegative")
        return cls(int(t))

    @classmethod
    def hit_level(cls, n: int, step_cap: int = DEFAULT_STEP_CAP) -> "StopRule":
        n = int(n)
        if n < 0:
            return cls(int(step_cap), lower=n, censor_on_cap=True)
        return cls(int(step_cap), upper=n, censor_on_cap=True)

    @classmethod
    def hit_either(cls, a: int, b: int, step_cap: int = DEFAULT_STEP_CAP) -> "StopRule":
        if not a <= 0 <= b:
            raise ValueError("hit_either needs a <= 0 <= b")
        return cls(int(step_cap), lower=int(a), upper=int(b), censor_on_cap=True)

    @classmethod
    def hit_or_timeout(cls, n: int, t: int) -> "StopRule":
        return cls.hit_level(n, step_cap=t)

    def kernel_levels(self) -> tuple[int, int]:
        lower = _engine.NO_LOWER if self.lower is None else self.lower
        upper = _engine.NO_UPPER if self.upper is None else self.upper
        return lower, upper


# --- single-walk state ----------------------------------------------------


@dataclass
class WalkState:
    """Mutable walker: position, clock and per-site visit counts."""

    position: int = 0
    step_count: int = 0
    visit_counts: dict[int, int] = field(default_factory=lambda: {0: 1})
    stream: object = None

    @classmethod
    def start(cls, seed: int = 0, replica: int = 0) -> "WalkState":
        return cls(stream=Stream(seed, replica))

    def check(self) -> None:
        if self.visit_counts.get(self.position, 0) < 1:
            raise AssertionError("current site has no recorded visit")
        if sum(self.visit_counts.values()) != self.step_count + 1:
            raise AssertionError("visit counts do not add up to step_count + 1")


def step(state: WalkState, profile: CookieProfile) -> WalkState:
    """Advance ``state`` by one step in place and return it."""
    i = state.visit_counts[state.position]
    u = state.stream.uniform()
    state.position += 1 if u < prob_at(profile, i) else -1
    state.visit_counts[state.position] = state.visit_counts.get(state.position, 0) + 1
    state.step_count += 1
    return state


# --- trajectories ---------------------------------------------------------


@dataclass
class Trajectory:
    positions: np.ndarray
    profile: CookieProfile
    censored: bool = False

    def __len__(self) -> int:
        return len(self.positions) - 1

    def check(self) -> None:
        pos = self.positions
        if pos[0] != 0 or np.any(np.abs(np.diff(pos)) != 1):
            raise AssertionError("not a nearest-neighbour path from 0")


def trajectory_from(positions, profile: CookieProfile) -> Trajectory:
    traj = Trajectory(np.asarray(positions, dtype=np.int64), profile)
    traj.check()
    return traj


def run(profile: CookieProfile, seed: int, replica: int, stop: StopRule, engine=None) -> Trajectory:
    """Simulate one replica until ``stop`` fires.

    Reproducible: the path depends only on ``(profile, seed, replica, stop)``.
    """
    k = _engine.get(engine)
    lower, upper = stop.kernel_levels()
    positions, hit = k.run_path(
        profile.cookie_probs, profile.tail_prob, stream_key(seed, replica), stop.max_steps, lower, upper
    )
    return Trajectory(positions, profile, censored=stop.censor_on_cap and not hit)


def hitting_time(traj: Trajectory, level: int) -> int | None:
    """First index ``t`` with ``X_t == level``; None when the path never gets there."""
    idx = np.flatnonzero(traj.positions == level)
    return int(idx[0]) if idx.size else None


def backtrack_counts(traj: Trajectory, target: int) -> dict[int, int]:
    """Left steps taken from each site strictly before the first hit of ``target``."""
    t_hit = hitting_time(traj, target)
    if t_hit is None:
        raise NotHitError(f"trajectory never reaches {target}")
    pos = traj.positions[: t_hit + 1]
    left_from = pos[:-1][np.diff(pos) < 0]
    sites, counts = np.unique(left_from, return_counts=True)
    return {int(s): int(c) for s, c in zip(sites, counts)}


def visit_indices(positions: np.ndarray) -> np.ndarray:
    """For each time ``t``, the number of visits to ``X_t`` at times ``0..t``."""
    positions = np.asarray(positions)
    order = np.argsort(positions, kind="stable")
    sorted_pos = positions[order]
    starts = np.r_[0, np.flatnonzero(np.diff(sorted_pos)) + 1]
    group_start = np.repeat(starts, np.diff(np.r_[starts, len(order)]))
    ranks = np.empty(len(order), dtype=np.int64)
    ranks[order] = np.arange(len(order)) - group_start + 1
    return ranks


def step_drifts(traj: Trajectory) -> np.ndarray:
    """Drift ``2 p_i - 1`` of the cookie used by each of the ``n`` steps."""
    prof = traj.profile
    idx = visit_indices(traj.positions)[:-1]
    table = np.array([2.0 * p - 1.0 for p in prof.cookie_probs] + [2.0 * prof.tail_prob - 1.0])
    return table[np.minimum(idx, prof.M + 1) - 1]


@dataclass
class WalkFunctionals:
    per_site_drift: dict[int, float]
    negative_drift: float
    up_crossings_at_origin: int
    negative_part_walk: int
    martingale_value: float


@dataclass
class FunctionalSeries:
    """The functionals evaluated at every time ``0..n`` of a trajectory."""

    v: np.ndarray
    x_minus: np.ndarray
    d_minus: np.ndarray
    r: np.ndarray


def functional_series(traj: Trajectory) -> FunctionalSeries:
    pos = traj.positions
    drifts = step_drifts(traj)
    left_side = pos[:-1] <= 0
    incr = np.diff(pos)
    zeros = np.zeros(1, dtype=np.int64)
    v = np.r_[zeros, np.cumsum((pos[:-1] == 0) & (incr > 0))]
    x_minus = np.r_[zeros, np.cumsum(np.where(left_side, incr, 0))]
    d_minus = np.r_[0.0, np.cumsum(np.where(left_side, drifts, 0.0))]
    return FunctionalSeries(v, x_minus, d_minus, x_minus - d_minus)


def functionals(traj: Trajectory) -> WalkFunctionals:
    """``D^x_n``, ``D^-_n``, ``V_n``, ``X^-_n`` and ``R_n`` at the final time."""
    pos = traj.positions
    drifts = step_drifts(traj)
    per_site: dict[int, float] = {}
    for x, d in zip(pos[:-1].tolist(), drifts.tolist()):
        per_site[x] = per_site.get(x, 0.0) + d
    for x in np.unique(pos).tolist():
        per_site.setdefault(x, 0.0)
    series = functional_series(traj)
    return WalkFunctionals(
        per_site_drift=per_site,
        negative_drift=float(series.d_minus[-1]),
        up_crossings_at_origin=int(series.v[-1]),
        negative_part_walk=int(series.x_minus[-1]),
        martingale_value=float(series.r[-1]),
    )


# --- replica batches ------------------------------------------------------


def _chunks(replicas: int):
    for start in range(0, replicas, CHUNK):
        yield start, min(CHUNK, replicas - start)


def run_replicas(
    profile: CookieProfile,
    seed: int,
    replicas: int,
    max_steps: int,
    lower: int | None = None,
    upper: int | None = None,
    track_k: int = 0,
    replica0: int = 0,
    threads: int = 1,
    engine=None,
) -> dict[str, np.ndarray]:
    """Run ``replicas`` independent walks and stack the kernel statistics.

    Replica ``r`` always uses stream ``(seed, replica0 + r)`` so the output
    is the same for any ``threads``.
    """
    k = _engine.get(engine)
    lo = _engine.NO_LOWER if lower is None else lower
    hi = _engine.NO_UPPER if upper is None else upper

    def job(chunk):
        start, n = chunk
        return k.run_batch(
            profile.cookie_probs, profile.tail_prob, seed, replica0 + start, n, max_steps, lo, hi, track_k
        )

    chunks = list(_chunks(replicas))
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(job, chunks))
    else:
        parts = [job(c) for c in chunks]
    if not parts:
        parts = [job((0, 0))]
    return {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}


@dataclass
class SpeedEstimate:
    v_hat: float
    stderr: float
    replicas: int
    horizon: int

    def upper_confidence(self, level: float = 0.99) -> float:
        """One-sided upper bound for the speed at the given confidence."""
        from scipy.stats import norm

        return self.v_hat + float(norm.ppf(level)) * self.stderr


def estimate_speed(
    profile: CookieProfile, horizon: int, replicas: int, seed: int = 0, threads: int = 1, engine=None
) -> SpeedEstimate:
    """Mean and standard error of ``X_n / n`` over independent replicas."""
    if replicas < 2:
        raise ValueError("need at least two replicas for a standard error")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    out = run_replicas(profile, seed, replicas, horizon, threads=threads, engine=engine)
    ratios = out["final_x"] / float(horizon)
    return SpeedEstimate(
        float(ratios.mean()), float(ratios.std(ddof=1) / math.sqrt(replicas)), replicas, horizon
    )
