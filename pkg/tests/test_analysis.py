import math

import numpy as np
import pytest

from cookiewalk import analysis
from cookiewalk.analysis import Regime
from cookiewalk.profile import CookieProfile

W = CookieProfile([0.9, 0.9], 0.3)


@pytest.mark.parametrize(
    "prof, regime",
    [
        (CookieProfile([0.9, 0.9], 0.3), Regime.LEFT_TRANSIENT_NEGATIVE_SPEED),
        (CookieProfile([0.99] * 10, 0.3), Regime.LEFT_TRANSIENT_NEGATIVE_SPEED),
        (CookieProfile([0.9, 0.9], 0.5), Regime.RIGHT_TRANSIENT_ZERO_SPEED),
        (CookieProfile([0.6], 0.5), Regime.RECURRENT),
        (CookieProfile([0.75], 0.5), Regime.RECURRENT),
        (CookieProfile([1.0 - 1e-9, 0.5 + 0.25 - 1e-12], 0.5), Regime.RIGHT_TRANSIENT_ZERO_SPEED),
        (CookieProfile([0.9] * 4, 0.5), Regime.RIGHT_TRANSIENT_POSITIVE_SPEED),
        (CookieProfile([0.9, 0.3], 0.5), Regime.UNCLASSIFIED),
        (CookieProfile([0.9], 0.7), Regime.UNCLASSIFIED),
    ],
    ids=str,
)
def test_classify(prof, regime):
    assert analysis.classify(prof).regime is regime


def test_classify_report_fields():
    rep = analysis.classify(W).to_dict()
    assert rep["regime"] == "LEFT_TRANSIENT_NEGATIVE_SPEED"
    assert rep["drift"] == pytest.approx(1.6)
    assert rep["basis"]


def ruin_by_linear_solve(q, K):
    """P[hit -K before K] from 0 via the harmonic equations on (-K, K)."""
    n = 2 * K - 1
    a = np.eye(n)
    b = np.zeros(n)
    for i in range(n):  # site i - K + 1
        if i + 1 < n:
            a[i, i + 1] -= q
        if i - 1 >= 0:
            a[i, i - 1] -= 1 - q
        else:
            b[i] += 1 - q
    return float(np.linalg.solve(a, b)[K - 1])


@pytest.mark.parametrize("q", [0.3, 0.45, 0.5, 0.6])
@pytest.mark.parametrize("K", [1, 3, 10])
def test_gamblers_ruin(q, K):
    assert analysis.gamblers_ruin_down(q, K) == pytest.approx(ruin_by_linear_solve(q, K), rel=1e-10)


def test_gamblers_ruin_large_K_finite():
    assert analysis.gamblers_ruin_down(0.3, 2000) == pytest.approx(1.0)
    assert analysis.gamblers_ruin_down(0.7, 2000) == pytest.approx(0.0)


def test_multinomial_envelope():
    rng = np.random.default_rng(1)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert analysis.multinomial_envelope(rng.multinomial(10**5, p), p).passed
    assert not analysis.multinomial_envelope(rng.multinomial(10**5, [0.12, 0.2, 0.3, 0.38]), p).passed
    # a count in an impossible cell is an outright failure
    assert not analysis.multinomial_envelope([5, 0, 1], [0.5, 0.5, 0.0]).passed


def test_two_sample_envelope():
    rng = np.random.default_rng(2)
    p = rng.dirichlet(np.ones(12))
    assert analysis.two_sample_envelope(rng.multinomial(10**5, p), rng.multinomial(10**5, p)).passed
    q = np.roll(p, 1)
    assert not analysis.two_sample_envelope(rng.multinomial(10**5, p), rng.multinomial(10**5, q)).passed


def test_monotonicity_examples():
    w, w2 = CookieProfile([0.6], 0.3), CookieProfile([0.7], 0.4)
    assert analysis.verify_monotonicity([(w, w2)], [-2], [2], 8).passed
    res = analysis.verify_monotonicity([(W, W)], t_max=6)
    assert res.passed and res.details["max_gap"] == 0.0
    with pytest.raises(ValueError):
        analysis.verify_monotonicity([(w2, w)], t_max=4)
    with pytest.raises(ValueError):
        analysis.verify_monotonicity([(w, w2)], x_range=[1], t_max=4)


def test_random_pairs_dominate():
    from cookiewalk.profile import dominates

    pairs = analysis.random_dominating_pairs(30, seed=4)
    assert len(pairs) == 30 and all(dominates(a, b) for a, b in pairs)


def test_martingale_check():
    assert analysis.verify_martingale(W, 6).passed


def test_backtrack_correspondence_bound():
    res = analysis.verify_backtrack_correspondence(CookieProfile([0.9, 0.6], 0.7), 2, t_cap=14)
    assert res.passed and res.details["dominated"]
    assert res.estimate <= res.target


def test_drift_identity_small():
    res = analysis.verify_drift_identity(W, 5, replicas=4000, seed=3)
    assert res.passed, res.line()
    assert res.details["censored"] == 0


def test_drift_identity_rejects_fair_tail():
    with pytest.raises(ValueError):
        analysis.verify_drift_identity(CookieProfile([0.9], 0.5), 3, replicas=10)


def test_d0_and_site_decomposition_small():
    results = analysis.verify_d0_limit(W, (1, 5, 20), replicas=4000, seed=1, sites_K=5)
    ids = [r.check_id for r in results]
    assert ids == ["d0_limit_K20", "d0_monotone_approach", "site_decomposition_K5"]
    assert all(r.passed for r in results), [r.line() for r in results]


def test_transience_probe_plain_walk():
    for res in analysis.transience_probe(CookieProfile([], 0.3), (3, 6), replicas=4000, seed=2):
        assert res.passed, res.line()
    res = analysis.transience_probe(CookieProfile([], 0.5), (4,), replicas=4000, seed=2)
    assert res[0].estimate == pytest.approx(0.5, abs=3 * res[0].stderr)


def test_transience_envelope_lookup():
    assert analysis.transience_envelope(W, 20, 10**4) > 0.2
    assert analysis.transience_envelope(CookieProfile([0.8], 0.3), 20, 10**4) is None
    env = analysis.transience_envelope(CookieProfile([], 0.3), 10, 10**4)
    assert env < analysis.gamblers_ruin_down(0.3, 10)


def test_speed_checks():
    assert analysis.verify_speed(CookieProfile([], 0.3), 2000, 50, seed=1).passed
    res = analysis.verify_speed(W, 5000, 20, seed=1)
    assert res.check_id == "speed_negative" and res.passed


def test_zero_one_probe():
    res = analysis.zero_one_probe(W, horizons=(500, 5000), replicas=300, seed=1)
    assert res.passed, res.line()


def test_check_result_serialisation():
    res = analysis.CheckResult("x", None, float("nan"), 0.0, 1.0, True, {"a": np.float64(2.0)})
    d = res.to_dict()
    assert d["estimate"] is None and d["details"] == {"a": 2.0}
    assert res.csv_row()[0] == "x"
    assert res.line().startswith("[PASS]")
