import numpy as np
import pytest

from ratingprecision.core import RatingMatrix
from ratingprecision.generator import BiasScenario, ExperimentConfig, simulate_experiment

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if call.when == "setup" and call.excinfo is not None:
        status = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"
        _CRITERIA[number] = (title, status, str(call.excinfo.value).splitlines()[0] if status == "SKIP" else "setup error")
    elif call.when == "call":
        if call.excinfo is None:
            _CRITERIA[number] = (title, "PASS", "")
        elif call.excinfo.errisinstance(pytest.skip.Exception):
            _CRITERIA[number] = (title, "SKIP", str(call.excinfo.value).splitlines()[0])
        else:
            msg = str(call.excinfo.value).strip().splitlines()
            _CRITERIA[number] = (title, "FAIL", msg[0] if msg else "")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    def order(key):
        head, _, tail = str(key).partition("-")
        return int(head), tail

    for number in sorted(_CRITERIA, key=order):
        title, status, note = _CRITERIA[number]
        line = f"criterion {str(number):<6} {status:<4} {title}"
        if note:
            line += f" | {note}"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_matrix():
    return RatingMatrix(np.array([
        [1, 2, 3, 4, 5],
        [2, 2, 3, 5, 5],
        [1, 3, 4, 4, 4],
        [2, 3, 3, 4, 5],
    ], dtype=float))


@pytest.fixture
def simulated():
    def make(sigma=0.75, kind="none", p=1.0, seed=3, n=30, k=21):
        cfg = ExperimentConfig(k=k, n=n, mu=np.linspace(1, 5, k), sigma=sigma,
                               scenario=BiasScenario(kind), p=p, seed=seed)
        return simulate_experiment(cfg).ratings
    return make
