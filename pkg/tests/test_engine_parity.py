"""The compiled and pure-Python engines must agree bit for bit."""

import numpy as np
import pytest

from cookiewalk import _pyengine, engine, walk
from cookiewalk.profile import CookieProfile
from cookiewalk.rng import stream_key

from conftest import FIXTURE_PROFILES

pytestmark = pytest.mark.skipif("cython" not in engine.available(), reason="compiled engine not built")


@pytest.fixture(scope="module")
def cy():
    return engine.get("cython")


@pytest.mark.parametrize("prof", FIXTURE_PROFILES + [CookieProfile([0.99] * 10, 0.3)], ids=str)
def test_run_batch_identical(cy, prof):
    args = (prof.cookie_probs, prof.tail_prob, 11, 3, 60, 3000, -15, 40)
    a = _pyengine.run_batch(*args, track_k=15)
    b = cy.run_batch(*args, 15)
    for key in a:
        np.testing.assert_array_equal(a[key], b[key], err_msg=key)


@pytest.mark.parametrize("prof", FIXTURE_PROFILES, ids=str)
def test_paths_and_samples_identical(cy, prof):
    c, q = prof.cookie_probs, prof.tail_prob
    np.testing.assert_array_equal(_pyengine.paths_matrix(c, q, 2, 0, 50, 12), cy.paths_matrix(c, q, 2, 0, 50, 12))
    for j in range(5):
        for decomposed in (False, True):
            np.testing.assert_array_equal(
                _pyengine.sample_a(c, q, j, 4, 0, 300, decomposed), cy.sample_a(c, q, j, 4, 0, 300, decomposed)
            )
    np.testing.assert_array_equal(_pyengine.enumerate_probs(c, q, 11), cy.enumerate_probs(c, q, 11))


def test_long_path_grows_buffer(cy):
    prof = CookieProfile([0.99] * 3, 0.45)
    key = stream_key(1, 1)
    a, ha = _pyengine.run_path(prof.cookie_probs, prof.tail_prob, key, 20000, _pyengine.NO_LOWER, _pyengine.NO_UPPER)
    b, hb = cy.run_path(prof.cookie_probs, prof.tail_prob, key, 20000, _pyengine.NO_LOWER, _pyengine.NO_UPPER)
    assert np.abs(a).max() > 2000  # left the initial window
    np.testing.assert_array_equal(a, b)
    assert ha == hb is False


def test_batch_matches_single_paths(cy):
    prof = CookieProfile([0.8, 0.7], 0.35)
    out = walk.run_replicas(prof, 9, 30, 500, lower=-10, engine="cython")
    for r in range(30):
        traj = walk.run(prof, 9, r, walk.StopRule(500, lower=-10, censor_on_cap=True), engine="python")
        assert out["final_x"][r] == traj.positions[-1]
        assert out["steps"][r] == len(traj)
        f = walk.functionals(traj)
        assert out["d_minus"][r] == f.negative_drift
        assert out["v_count"][r] == f.up_crossings_at_origin


def test_threads_do_not_change_results():
    prof = CookieProfile([0.9, 0.9], 0.3)
    a = walk.run_replicas(prof, 3, 3 * walk.CHUNK + 17, 10**5, lower=-5, threads=1)
    b = walk.run_replicas(prof, 3, 3 * walk.CHUNK + 17, 10**5, lower=-5, threads=4)
    for key in a:
        np.testing.assert_array_equal(a[key], b[key])
