"""Regime classification and the numerical verification checks.

Every check returns :class:`CheckResult` objects with a single pass/fail
verdict.  Monte Carlo checks pass when the estimate lies within
``N_SIGMA`` combined standard errors of its target; hitting-time checks
additionally fail when more than ``MAX_CENSORED_FRACTION`` of the replicas
hit the step cap before the stopping time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from . import branching, oracle, walk
from .profile import CookieProfile, dominates, finite_drift

N_SIGMA = 3.0
MAX_CENSORED_FRACTION = 1e-3
EXACT_TOL = 1e-12


class InsufficientReplicas(ValueError):
    pass


class Regime(str, Enum):
    RECURRENT = "RECURRENT"
    RIGHT_TRANSIENT_ZERO_SPEED = "RIGHT_TRANSIENT_ZERO_SPEED"
    RIGHT_TRANSIENT_POSITIVE_SPEED = "RIGHT_TRANSIENT_POSITIVE_SPEED"
    LEFT_TRANSIENT_NEGATIVE_SPEED = "LEFT_TRANSIENT_NEGATIVE_SPEED"
    UNCLASSIFIED = "UNCLASSIFIED"


@dataclass
class RegimeReport:
    regime: Regime
    basis: str
    reason: str
    drift: float
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["regime"] = self.regime.value
        return d


def classify(profile: CookieProfile) -> RegimeReport:
    """Regime implied by the tail probability and the cookie drift sum.

    A tail below 1/2 always gives left transience with negative speed.  With
    a fair tail and no cookie below 1/2 the drift sum decides: recurrent up
    to 1, right transient with zero speed up to 2, positive speed above.
    Everything else is left unclassified rather than extrapolated.
    """
    q = profile.tail_prob
    delta = finite_drift(profile)
    if q < 0.5:
        return RegimeReport(
            Regime.LEFT_TRANSIENT_NEGATIVE_SPEED,
            "theorem:negative-tail-drift",
            f"tail probability {q:g} < 1/2",
            delta,
        )
    if q == 0.5 and all(p >= 0.5 for p in profile.cookie_probs):
        basis = "prior-work:cookie-drift-thresholds"
        if delta <= 1.0:
            return RegimeReport(Regime.RECURRENT, basis, f"drift sum {delta:g} <= 1", delta)
        if delta <= 2.0:
            return RegimeReport(
                Regime.RIGHT_TRANSIENT_ZERO_SPEED, basis, f"1 < drift sum {delta:g} <= 2", delta
            )
        return RegimeReport(Regime.RIGHT_TRANSIENT_POSITIVE_SPEED, basis, f"drift sum {delta:g} > 2", delta)
    if q == 0.5:
        reason = "fair tail with some cookie below 1/2"
    else:
        reason = f"tail probability {q:g} > 1/2 is outside the covered results"
    return RegimeReport(Regime.UNCLASSIFIED, "none", reason, delta)


# --- reports ----------------------------------------------------------------


@dataclass
class CheckResult:
    check_id: str
    profile: CookieProfile | None
    estimate: float
    stderr: float
    target: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "profile_json": self.profile.to_json() if self.profile is not None else "",
            "estimate": _jsonable(float(self.estimate)),
            "stderr": _jsonable(float(self.stderr)),
            "target": _jsonable(float(self.target)),
            "pass": bool(self.passed),
            "details": _jsonable(self.details),
        }

    def csv_row(self) -> list:
        d = self.to_dict()
        return [d["check_id"], d["profile_json"], repr(d["estimate"]), repr(d["stderr"]), repr(d["target"]), d["pass"]]

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.check_id}: estimate={self.estimate:.6g} stderr={self.stderr:.3g} target={self.target:.6g}"


CSV_HEADER = ["check_id", "profile_json", "estimate", "stderr", "target", "pass"]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, CookieProfile):
        return obj.to_dict()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        raise InsufficientReplicas("need at least two replicas")
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


def _within(estimate: float, target: float, se: float, n_sigma: float = N_SIGMA) -> bool:
    return abs(estimate - target) <= n_sigma * se


def _hitting_runs(profile, K, replicas, step_cap, seed, replica0=0, threads=1, track_k=0):
    if profile.tail_prob >= 0.5:
        raise ValueError("hitting-time identities need a tail probability below 1/2")
    if replicas < 2:
        raise InsufficientReplicas("need at least two replicas")
    out = walk.run_replicas(
        profile, seed, replicas, step_cap, lower=-K, track_k=track_k, replica0=replica0, threads=threads
    )
    censored = int((~out["hit"]).sum())
    return out, censored


# --- identities along hitting times ----------------------------------------


def verify_drift_identity(
    profile: CookieProfile,
    K: int,
    replicas: int = 10**5,
    step_cap: int = walk.DEFAULT_STEP_CAP,
    seed: int = 0,
    threads: int = 1,
) -> CheckResult:
    """``E[D^-_{T_{-K}}] - E[V_{T_{-K}}] = -K`` by Monte Carlo."""
    if K < 1:
        raise ValueError("K must be at least 1")
    out, censored = _hitting_runs(profile, K, replicas, step_cap, seed, threads=threads)
    ok = out["hit"]
    diff = out["d_minus"][ok] - out["v_count"][ok]
    est, se = _mean_se(diff)
    d_mean, d_se = _mean_se(out["d_minus"][ok])
    v_mean, v_se = _mean_se(out["v_count"][ok])
    frac = censored / replicas
    passed = _within(est, -K, se) and frac <= MAX_CENSORED_FRACTION
    return CheckResult(
        f"drift_identity_K{K}",
        profile,
        est,
        se,
        float(-K),
        passed,
        {
            "E_D_minus": d_mean,
            "E_D_minus_se": d_se,
            "E_V": v_mean,
            "E_V_se": v_se,
            "replicas": replicas,
            "censored": censored,
            "censored_fraction": frac,
            "mean_steps": float(out["steps"][ok].mean()) if ok.any() else float("nan"),
        },
    )


def estimate_d0_sequence(profile, K_list, replicas, step_cap=walk.DEFAULT_STEP_CAP, seed=0, replica0=0, threads=1):
    """Estimates of ``E[D^0_{T_{-k}}]`` for every ``k`` in ``K_list`` (one batch of runs)."""
    kmax = max(K_list)
    out, censored = _hitting_runs(profile, kmax, replicas, step_cap, seed, replica0, threads, track_k=kmax)
    ok = out["hit"]
    hits = out["d0_hits"][ok]
    stats = [_mean_se(hits[:, k]) for k in K_list]
    return stats, out, censored


def verify_d0_limit(
    profile: CookieProfile,
    K_list: Sequence[int] = (1, 2, 5, 10, 20, 50),
    replicas: int = 10**5,
    step_cap: int = walk.DEFAULT_STEP_CAP,
    seed: int = 0,
    sites_K: int | None = 10,
    threads: int = 1,
) -> list[CheckResult]:
    """The origin's total drift has mean ``-1``.

    Produces three checks: the largest-``K`` estimate of
    ``E[D^0_{T_{-K}}]`` against ``-1``; the distance to ``-1`` shrinking
    along ``K_list`` (within noise); and, when ``sites_K`` is given, the
    site-by-site decomposition from :func:`verify_site_decomposition`.
    """
    K_list = sorted(set(int(k) for k in K_list))
    if K_list[0] < 1:
        raise ValueError("K values must be positive")
    stats, _, censored = estimate_d0_sequence(profile, K_list, replicas, step_cap, seed, threads=threads)
    frac = censored / replicas
    est, se = stats[-1]
    results = [
        CheckResult(
            f"d0_limit_K{K_list[-1]}",
            profile,
            est,
            se,
            -1.0,
            _within(est, -1.0, se) and frac <= MAX_CENSORED_FRACTION,
            {"censored": censored, "replicas": replicas},
        )
    ]
    dist = [abs(m + 1.0) for m, _ in stats]
    steps_ok = [
        dist[i + 1] <= dist[i] + N_SIGMA * math.hypot(stats[i][1], stats[i + 1][1]) for i in range(len(stats) - 1)
    ]
    results.append(
        CheckResult(
            "d0_monotone_approach",
            profile,
            float(dist[-1]),
            float(stats[-1][1]),
            0.0,
            all(steps_ok) and frac <= MAX_CENSORED_FRACTION,
            {"K": K_list, "estimates": [m for m, _ in stats], "stderrs": [s for _, s in stats], "steps_ok": steps_ok},
        )
    )
    if sites_K is not None:
        results.append(
            verify_site_decomposition(profile, sites_K, replicas, step_cap, seed, threads=threads)
        )
    return results


def verify_site_decomposition(
    profile: CookieProfile,
    K: int = 10,
    replicas: int = 10**5,
    step_cap: int = walk.DEFAULT_STEP_CAP,
    seed: int = 0,
    threads: int = 1,
) -> CheckResult:
    """``E[D^-_{T_{-K}}] = sum_{x=-K}^{0} E_0[D^0_{T_{-K-x}}]``.

    The two sides are estimated from disjoint replica blocks and compared
    within combined standard errors.
    """
    left_runs, c_left = _hitting_runs(profile, K, replicas, step_cap, seed, 0, threads)
    lhs, lhs_se = _mean_se(left_runs["d_minus"][left_runs["hit"]])
    right_runs, c_right = _hitting_runs(profile, K, replicas, step_cap, seed, replicas, threads, track_k=K)
    per_rep = right_runs["d0_hits"][right_runs["hit"]].sum(axis=1)
    rhs, rhs_se = _mean_se(per_rep)
    se = math.hypot(lhs_se, rhs_se)
    frac = max(c_left, c_right) / replicas
    return CheckResult(
        f"site_decomposition_K{K}",
        profile,
        lhs - rhs,
        se,
        0.0,
        _within(lhs - rhs, 0.0, se) and frac <= MAX_CENSORED_FRACTION,
        {"lhs": lhs, "lhs_se": lhs_se, "rhs": rhs, "rhs_se": rhs_se, "censored": [c_left, c_right]},
    )


# --- transience ---------------------------------------------------------------


def gamblers_ruin_down(q: float, K: int) -> float:
    """``P[T_{-K} < T_{+K}]`` for the plain walk with right-step probability ``q``."""
    if q == 0.5:
        return 0.5
    # rho**K / (1 + rho**K) with rho = (1 - q) / q, as a logistic in K log rho
    z = K * math.log((1.0 - q) / q)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _load_envelopes() -> dict:
    try:
        text = resources.files("cookiewalk").joinpath("data/transience_envelope.json").read_text()
    except FileNotFoundError:
        return {}
    return json.loads(text)


def transience_envelope(profile: CookieProfile, K: int, replicas: int) -> float | None:
    """Lower bound ``1 - eps(K)`` on the leftward exit frequency, if one is known.

    For ``M = 0`` it comes from the closed form; for cookie profiles from
    the calibrated fixture table shipped in ``data/``.
    """
    if profile.M == 0:
        p = gamblers_ruin_down(profile.tail_prob, K)
        return p - N_SIGMA * math.sqrt(p * (1.0 - p) / replicas)
    table = _load_envelopes()
    entry = table.get(profile.to_json(), {})
    value = entry.get(str(K))
    return None if value is None else float(value)


def exit_frequency(profile, K, replicas, seed=0, step_cap=walk.DEFAULT_STEP_CAP, replica0=0, threads=1):
    out = walk.run_replicas(
        profile, seed, replicas, step_cap, lower=-K, upper=K, replica0=replica0, threads=threads
    )
    down = out["final_x"] == -K
    freq = float(down.mean())
    se = math.sqrt(max(freq * (1.0 - freq), 1.0 / replicas) / replicas)
    return freq, se, int((~out["hit"]).sum())


def transience_probe(
    profile: CookieProfile,
    K_list: Iterable[int] = (5, 10, 20),
    replicas: int = 10**4,
    seed: int = 0,
    threads: int = 1,
) -> list[CheckResult]:
    """Frequency of leaving ``(-K, K)`` on the left, for each ``K``.

    For a tail below 1/2 the frequencies must not decrease in ``K`` (within
    noise) and must clear the envelope where one is known; for ``M = 0``
    each frequency is also compared with the gambler's-ruin value.
    """
    K_list = sorted(int(k) for k in K_list)
    rows = []
    for i, K in enumerate(K_list):
        freq, se, cens = exit_frequency(profile, K, replicas, seed, replica0=i * replicas, threads=threads)
        rows.append((K, freq, se, cens))
    results = []
    for K, freq, se, cens in rows:
        if profile.M == 0:
            target = gamblers_ruin_down(profile.tail_prob, K)
            passed = _within(freq, target, se)
        else:
            target = float("nan")
            passed = True
        env = transience_envelope(profile, K, replicas)
        if profile.tail_prob < 0.5 and env is not None and profile.M > 0:
            passed = passed and freq >= env
        results.append(
            CheckResult(
                f"transience_K{K}", profile, freq, se, target, passed and cens == 0, {"envelope": env, "censored": cens}
            )
        )
    if profile.tail_prob < 0.5 and len(rows) > 1:
        steps_ok = [
            rows[i + 1][1] >= rows[i][1] - N_SIGMA * math.hypot(rows[i][2], rows[i + 1][2])
            for i in range(len(rows) - 1)
        ]
        strict = rows[-1][1] > rows[0][1] + N_SIGMA * math.hypot(rows[0][2], rows[-1][2])
        results.append(
            CheckResult(
                "transience_increasing",
                profile,
                rows[-1][1] - rows[0][1],
                math.hypot(rows[0][2], rows[-1][2]),
                0.0,
                all(steps_ok) and strict,
                {"K": [r[0] for r in rows], "freq": [r[1] for r in rows], "steps_ok": steps_ok},
            )
        )
    return results


def zero_one_probe(
    profile: CookieProfile,
    K: int = 10,
    horizons: Sequence[int] = (10**3, 10**4, 10**5),
    replicas: int = 2000,
    seed: int = 0,
    escape_level: int = 50,
    threads: int = 1,
) -> CheckResult:
    """Statistical look at the zero-one law for rightward escape.

    Records how often ``max_{t <= n} X_t >= K`` for growing ``n`` (it must
    settle) and bounds ``P[X_n -> +inf]`` by the fraction of walks that
    never reach ``-escape_level`` within the largest horizon.
    """
    freqs = []
    for n in horizons:
        out = walk.run_replicas(profile, seed, replicas, n, threads=threads)
        freqs.append(float((out["max_x"] >= K).mean()))
    out = walk.run_replicas(profile, seed, replicas, max(horizons), lower=-escape_level, threads=threads)
    escaped = float((~out["hit"]).mean())
    se = math.sqrt(max(escaped * (1.0 - escaped), 1.0 / replicas) / replicas)
    se_last = math.sqrt(max(freqs[-1] * (1.0 - freqs[-1]), 1.0 / replicas) / replicas)
    settled = abs(freqs[-1] - freqs[-2]) <= N_SIGMA * math.sqrt(2.0) * se_last if len(freqs) > 1 else True
    passed = settled and (profile.tail_prob >= 0.5 or escaped <= N_SIGMA * se)
    return CheckResult(
        "zero_one_escape_right",
        profile,
        escaped,
        se,
        0.0,
        passed,
        {"K": K, "horizons": list(horizons), "freq_max_ge_K": freqs, "settled": settled},
    )


def verify_speed(profile, horizon, replicas, seed=0, threads=1, confidence=0.99) -> CheckResult:
    """Speed sign for a tail below 1/2 (upper confidence bound < 0); ``2q - 1`` when ``M = 0``."""
    est = walk.estimate_speed(profile, horizon, replicas, seed=seed, threads=threads)
    if profile.M == 0:
        target = 2.0 * profile.tail_prob - 1.0
        passed = _within(est.v_hat, target, est.stderr)
        check_id = "speed_closed_form"
    else:
        target = float("nan")
        passed = est.upper_confidence(confidence) < 0.0
        check_id = "speed_negative"
    return CheckResult(
        check_id,
        profile,
        est.v_hat,
        est.stderr,
        target,
        passed,
        {"horizon": horizon, "replicas": replicas, "upper_confidence": est.upper_confidence(confidence)},
    )


# --- exact checks ----------------------------------------------------------


def random_dominating_pairs(n: int, seed: int = 0, max_cookies: int = 3) -> list[tuple[CookieProfile, CookieProfile]]:
    """``n`` random pairs ``(w, w')`` with ``w`` pointwise below ``w'``."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n:
        m = int(rng.integers(0, max_cookies + 1))
        lo = rng.uniform(0.05, 0.9, size=m + 1)
        hi = lo + rng.uniform(0.0, 0.95 - lo)
        w = CookieProfile(lo[:m], lo[m])
        w2 = CookieProfile(hi[:m], hi[m])
        if dominates(w, w2):
            pairs.append((w, w2))
    return pairs


def verify_monotonicity(
    pairs: Sequence[tuple[CookieProfile, CookieProfile]],
    x_range: Iterable[int] = range(-3, 1),
    z_range: Iterable[int] = range(0, 4),
    t_max: int = 10,
) -> CheckResult:
    """Exact check that raising the environment never lowers ``P[T_z <= T_x ^ t]``."""
    x_range, z_range = list(x_range), list(z_range)
    if any(x > 0 for x in x_range) or any(z < 0 for z in z_range):
        raise ValueError("need x <= 0 <= z")
    worst = -math.inf
    violations = 0
    evaluated = 0
    for w, w2 in pairs:
        if not dominates(w, w2):
            raise ValueError(f"{w} is not dominated by {w2}")
        law1 = oracle.enumerate_paths(w, t_max)
        law2 = oracle.enumerate_paths(w2, t_max)
        pos = law1.positions()
        for x in x_range:
            for z in z_range:
                for t in range(t_max + 1):
                    mask = oracle.hit_before(pos, z, x, t)
                    gap = float(law1.probs[mask].sum() - law2.probs[mask].sum())
                    evaluated += 1
                    worst = max(worst, gap)
                    if gap > EXACT_TOL:
                        violations += 1
    return CheckResult(
        "monotonicity",
        None,
        float(violations),
        0.0,
        0.0,
        violations == 0,
        {"pairs": len(pairs), "evaluations": evaluated, "max_gap": worst},
    )


def verify_martingale(profile: CookieProfile, n_max: int = 8) -> CheckResult:
    """Exact conditional increments of ``R`` for every prefix up to length ``n_max``."""
    worst = 0.0
    for n in range(n_max + 1):
        worst = max(worst, float(np.abs(oracle.conditional_increments(profile, n)).max()))
    return CheckResult("martingale_exact", profile, worst, 0.0, 0.0, worst <= EXACT_TOL, {"n_max": n_max})


def verify_backtrack_correspondence(
    profile: CookieProfile, n: int, t_cap: int = 24, N: int = 60
) -> CheckResult:
    """Censored backtrack-vector law against the chain started from the oracle's ``U^n_n``.

    Total variation treats the censored mass and the kernel truncation
    loss as two extra atoms; it is bounded by their sum.  The coupling also
    forces ``P_U(v) <= P_Z(v)`` for every vector, checked up to rounding.
    """
    back = oracle.joint_backtrack_law(profile, n, t_cap)
    first = {}
    for v, p in back.law.items():
        first[v[0]] = first.get(v[0], 0.0) + p
    total = sum(first.values())
    z0_law = {k: p / total for k, p in first.items()}
    kernel = branching.build_kernel(profile, max(N, profile.M + 2))
    z_probs, trunc = branching.z_joint_law(kernel, list(back.law), z0_law, n)
    l1 = sum(abs(p - z_probs[v]) for v, p in back.law.items())
    z_total = 1.0 - trunc
    l1 += max(0.0, z_total - sum(z_probs.values()))
    tv = 0.5 * (l1 + back.missing_mass + trunc)
    bound = back.missing_mass + trunc
    dominated = all(p <= z_probs[v] + EXACT_TOL for v, p in back.law.items())
    return CheckResult(
        f"backtrack_correspondence_n{n}",
        profile,
        tv,
        0.0,
        bound,
        tv <= bound + EXACT_TOL and dominated,
        {"missing_mass": back.missing_mass, "truncation": trunc, "dominated": dominated, "vectors": len(back.law)},
    )


def verify_functional_equation(
    profile: CookieProfile, N: int = 200, grid=(0.0, 0.25, 0.5, 0.75, 1.0), tol: float = 1e-6
) -> CheckResult:
    """Generating-function equation at ``N`` and ``2N``: small residual, no growth when ``N`` doubles."""
    law = branching.stationary(branching.build_kernel(profile, N))
    law2 = branching.stationary(branching.build_kernel(profile, 2 * N))
    r1 = [row.residual for row in branching.residual_sweep(profile, law.pmf, grid)]
    r2 = [row.residual for row in branching.residual_sweep(profile, law2.pmf, grid)]
    non_increasing = all(b <= a for a, b in zip(r1, r2))
    worst = max(r1)
    return CheckResult(
        f"functional_equation_N{N}",
        profile,
        worst,
        0.0,
        tol,
        worst <= tol and non_increasing,
        {"residuals": r1, "residuals_2N": r2, "non_increasing": non_increasing, "leak": law.leak},
    )


# --- distribution comparisons --------------------------------------------------


@dataclass
class EnvelopeResult:
    statistic: float
    df: int
    threshold: float
    passed: bool


def _pool(expected: np.ndarray, min_expected: float) -> list[np.ndarray]:
    """Group consecutive cells until each group expects ``min_expected`` counts."""
    groups, current, acc = [], [], 0.0
    for i, e in enumerate(expected):
        current.append(i)
        acc += e
        if acc >= min_expected:
            groups.append(np.array(current))
            current, acc = [], 0.0
    if current:
        if groups:
            groups[-1] = np.concatenate([groups[-1], current])
        else:
            groups.append(np.array(current))
    return groups


def _chi2_envelope(stat: float, df: int, n_sigma: float) -> EnvelopeResult:
    threshold = df + n_sigma * math.sqrt(2.0 * df) if df > 0 else 0.0
    return EnvelopeResult(float(stat), df, float(threshold), bool(stat <= threshold + 1e-12))


def multinomial_envelope(counts, probs, n_sigma: float = N_SIGMA, min_expected: float = 5.0) -> EnvelopeResult:
    """Does an empirical histogram fit exact cell probabilities?

    Pearson's statistic over pooled cells must stay within ``n_sigma``
    standard deviations of its null mean (``df + n_sigma * sqrt(2 df)``).
    Any count in a cell of probability zero fails outright.
    """
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    n = counts.sum()
    if np.any((probs <= 0.0) & (counts > 0)):
        return EnvelopeResult(math.inf, 0, 0.0, False)
    keep = probs > 0.0
    counts, probs = counts[keep], probs[keep]
    # leftover probability (e.g. a truncated tail) becomes its own cell
    rest = 1.0 - probs.sum()
    if rest > 1e-12:
        probs = np.append(probs, rest)
        counts = np.append(counts, n - counts.sum())
    expected = n * probs
    groups = _pool(expected, min_expected)
    obs = np.array([counts[g].sum() for g in groups])
    exp = np.array([expected[g].sum() for g in groups])
    stat = float(np.sum((obs - exp) ** 2 / exp))
    return _chi2_envelope(stat, len(groups) - 1, n_sigma)


def two_sample_envelope(counts_a, counts_b, n_sigma: float = N_SIGMA, min_expected: float = 5.0) -> EnvelopeResult:
    """Homogeneity of two histograms on the same cells (2 x k Pearson table)."""
    a = np.asarray(counts_a, dtype=np.float64)
    b = np.asarray(counts_b, dtype=np.float64)
    size = max(len(a), len(b))
    a = np.pad(a, (0, size - len(a)))
    b = np.pad(b, (0, size - len(b)))
    na, nb = a.sum(), b.sum()
    pooled = (a + b) / (na + nb)
    groups = _pool(pooled * min(na, nb), min_expected)
    stat = 0.0
    for g in groups:
        p = pooled[g].sum()
        ea, eb = na * p, nb * p
        stat += (a[g].sum() - ea) ** 2 / ea + (b[g].sum() - eb) ** 2 / eb
    return _chi2_envelope(stat, len(groups) - 1, n_sigma)
