import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import comb

from cookiewalk import branching
from cookiewalk.profile import CookieProfile
from cookiewalk.rng import Stream

from conftest import FIXTURE_PROFILES


def brute_pmf_A(profile, j, k_max):
    """Sum over all Bernoulli prefixes that end with the (j+1)-th success."""
    out = np.zeros(k_max + 1)
    for length in range(j + 1, j + 1 + k_max + 1):
        for bits in itertools.product((0, 1), repeat=length - 1):
            if sum(bits) != j:
                continue
            p = 1.0
            for i, b in enumerate(bits + (1,), start=1):
                w = profile.cookie_probs[i - 1] if i <= profile.M else profile.tail_prob
                p *= w if b else 1.0 - w
            out[length - j - 1] += p
    return out


@pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
@pytest.mark.parametrize("j", [0, 1, 4])
def test_negative_binomial_when_no_cookies(q, j):
    pmf, tail = branching.pmf_A(CookieProfile([], q), j, 40)
    k = np.arange(41)
    exact = comb(j + k, k) * q ** (j + 1) * (1 - q) ** k
    np.testing.assert_allclose(pmf, exact, rtol=0, atol=1e-12)
    assert pmf.sum() <= 1.0 and pmf.sum() + tail >= 1.0


@pytest.mark.parametrize("p", [0.1, 0.6, 0.95])
def test_single_cookie_closed_form(p):
    q = 0.35
    pmf, _ = branching.pmf_A(CookieProfile([p], q), 0, 30)
    k = np.arange(1, 31)
    assert pmf[0] == pytest.approx(p, abs=1e-12)
    np.testing.assert_allclose(pmf[1:], (1 - p) * q * (1 - q) ** (k - 1), rtol=0, atol=1e-12)


@pytest.mark.parametrize("j", [0, 1, 2, 3])
def test_pmf_matches_brute_force(fixture_profile, j):
    k_max = 7
    pmf, tail = branching.pmf_A(fixture_profile, j, k_max)
    np.testing.assert_allclose(pmf, brute_pmf_A(fixture_profile, j, k_max), rtol=1e-12, atol=1e-15)
    assert pmf.sum() + tail >= 1.0


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0.02, 0.98), max_size=4), st.floats(0.2, 0.9), st.integers(0, 6), st.integers(0, 30))
def test_pmf_is_sub_probability(cookies, q, j, k_max):
    pmf, tail = branching.pmf_A(CookieProfile(cookies, q), j, k_max)
    assert np.all(pmf >= 0)
    assert pmf.sum() <= 1.0 + 1e-12
    assert pmf.sum() + tail >= 1.0


def test_mean_A(fixture_profile):
    for j in range(4):
        pmf, _ = branching._pmf_A_full(fixture_profile, j)
        assert branching.mean_A(fixture_profile, j) == pytest.approx(float(np.dot(np.arange(len(pmf)), pmf)), rel=1e-9)


def test_sample_routes_coincide_at_boundary():
    prof = CookieProfile([0.9, 0.2, 0.6], 0.4)
    j = prof.M - 1
    for r in range(50):
        a = branching.sample_A(prof, j, Stream(3, r))
        b = branching.sample_A_decomposed(prof, j, Stream(3, r))
        assert a == b


def test_geometric_mean():
    q = 0.3
    draws = branching.sample_A_batch(CookieProfile([], q), 0, 10**5, seed=5)
    se = math.sqrt((1 - q) / q**2 / len(draws))
    assert abs(draws.mean() - (1 - q) / q) <= 3 * se


def test_sample_A_batch_matches_scalar(engine_name):
    prof = CookieProfile([0.9, 0.2], 0.4)
    batch = branching.sample_A_batch(prof, 3, 20, seed=2, engine=engine_name)
    direct = [branching.sample_A(prof, 3, Stream(2, i)) for i in range(20)]
    assert batch.tolist() == direct
    with pytest.raises(ValueError):
        branching.sample_A_batch(prof, 0, 5, route="decomposed")


def test_kernel_rows_and_deficits(fixture_profile):
    kern = branching.build_kernel(fixture_profile, 40)
    assert np.all(kern.entries >= 0)
    np.testing.assert_allclose(kern.entries.sum(axis=1) + kern.row_deficits, 1.0, atol=1e-10)
    # stochastically increasing rows
    tails = 1.0 - np.cumsum(kern.entries, axis=1)
    assert np.all(np.diff(tails, axis=0) >= -1e-12)


def test_kernel_deficit_geometric():
    kern = branching.build_kernel(CookieProfile([], 0.6), 50)
    assert kern.row_deficits[0] == pytest.approx(0.4**51, rel=1e-6)


def test_kernel_needs_room():
    with pytest.raises(ValueError):
        branching.build_kernel(CookieProfile([0.5, 0.5, 0.5], 0.6), 4)


@pytest.mark.parametrize("prof", [p for p in FIXTURE_PROFILES if p.tail_prob > 0.5] + [CookieProfile([0.8], 0.55)], ids=str)
def test_stationary_fixed_point(prof):
    kern = branching.build_kernel(prof, 120)
    law = branching.stationary(kern)
    np.testing.assert_allclose(law.pmf @ kern.entries / (law.pmf @ kern.entries).sum(), law.pmf, atol=1e-11)
    law2 = branching.stationary(branching.build_kernel(prof, 240))
    assert law2.leak <= law.leak + 1e-15


def test_stationary_reports_non_convergence():
    with pytest.raises(branching.StationaryNotConverged):
        branching.stationary(branching.build_kernel(CookieProfile([0.9], 0.7), 30), max_iter=3)


def test_stationary_matches_simulated_chain():
    prof = CookieProfile([0.9, 0.6], 0.7)
    law = branching.stationary(branching.build_kernel(prof, 100))
    # every 20th state after burn-in, from several independent chains
    samples = np.concatenate([branching.simulate_z(prof, 0, 4000, seed=8, replica=r)[200::20] for r in range(10)])
    counts = np.bincount(samples, minlength=len(law.pmf))[: len(law.pmf)]
    from cookiewalk.analysis import multinomial_envelope

    assert multinomial_envelope(counts, law.pmf).passed


def test_gen_fn_properties():
    pmf = np.array([0.2, 0.5, 0.3])
    assert branching.gen_fn(pmf, 1.0) == pytest.approx(1.0)
    assert branching.gen_fn(pmf, 0.0) == pytest.approx(0.2)
    s = np.linspace(0, 1, 21)
    g = np.array([branching.gen_fn(pmf, x) for x in s])
    assert np.all(np.diff(g) >= 0)
    assert np.all(np.diff(g, 2) >= -1e-15)
    with pytest.raises(ValueError):
        branching.gen_fn(pmf, 1.5)


def test_coefficients_at_one(fixture_profile):
    if fixture_profile.M == 0:
        pytest.skip("coefficients need at least one cookie")
    pmf = np.full(5, 0.2)
    assert branching.coeff_a(fixture_profile, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert branching.coeff_b(fixture_profile, 1.0, pmf) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("s", [0.0, 0.3, 0.8])
def test_single_cookie_coefficients(s):
    prof = CookieProfile([0.8], 0.55)
    a = branching.coeff_a(prof, s)
    assert a == pytest.approx(1.0 / branching.pgf_A(prof, 0, s), rel=1e-12)
    assert branching.coeff_b(prof, s, [0.0]) == pytest.approx(1.0 - a, abs=1e-12)


def test_residual_vanishes_at_one():
    prof = CookieProfile([0.9, 0.6], 0.7)
    law = branching.stationary(branching.build_kernel(prof, 100))
    assert branching.functional_residual(prof, law.pmf, 1.0) <= 1e-12


@pytest.mark.parametrize(
    "prof", [CookieProfile([0.9, 0.6], 0.7), CookieProfile([0.3, 0.9, 0.2], 0.6), CookieProfile([], 0.6)], ids=str
)
def test_functional_equation_small_residual(prof):
    law = branching.stationary(branching.build_kernel(prof, 200))
    assert max(r.residual for r in branching.residual_sweep(prof, law.pmf)) <= 1e-9


def test_moment_probe_contrast():
    stable = branching.moment_probe(CookieProfile([0.9], 0.7), Ns=(50, 100))
    assert stable[1][1] == pytest.approx(stable[0][1], rel=1e-6)
    growing = branching.moment_probe(CookieProfile([0.9], 0.3), Ns=(50, 100))
    assert growing[1][1] > 2 * growing[0][1]
