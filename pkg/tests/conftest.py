import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hxpcs import synth

# kernels compile on first use; keep hypothesis from timing that
settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


ACCEPTANCE_RESULTS = []
_STARTED = time.perf_counter()


def record(number, title, passed, detail):
    """Remember one acceptance verdict for the end-of-run summary."""
    ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}: {detail}")
    elapsed = time.perf_counter() - _STARTED
    failed = len(terminalreporter.stats.get("failed", []))
    terminalreporter.write_line(f"suite runtime {elapsed:.1f} s (< 120 s), {failed} failing tests")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def osc_small():
    return synth.gen_oscillatory(32, 256, 8, 0.5, 0.05, 3)


@pytest.fixture(scope="session")
def reference():
    return synth.load_reference()


@pytest.fixture(scope="session")
def online_encoder(reference):
    from hxpcs import build_online

    return build_online(reference, (64, 64), 100, r_samples=500, seed=0)
