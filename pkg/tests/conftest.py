import pytest

from cookiewalk import engine
from cookiewalk.profile import CookieProfile

FIXTURE_PROFILES = [
    CookieProfile([0.9, 0.9], 0.3),
    CookieProfile([], 0.3),
    CookieProfile([0.6], 0.5),
    CookieProfile([0.2, 0.95, 0.4], 0.45),
    CookieProfile([0.9, 0.6], 0.7),
]


@pytest.fixture(params=FIXTURE_PROFILES, ids=str)
def fixture_profile(request):
    return request.param


@pytest.fixture(params=sorted(engine.available()))
def engine_name(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
