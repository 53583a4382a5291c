import numpy as np
import pytest

from smsvm.dataset import Dataset


def random_dataset(rng: np.random.Generator, n: int, m: int) -> Dataset:
    X = rng.normal(size=(n, m))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    y[0], y[-1] = 1.0, -1.0
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_FILE = "test_acceptance.py"
_acceptance = []


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        props = dict(report.user_properties)
        status = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _acceptance.append((props.get("criterion", report.nodeid), status, props.get("measured", "")))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, measured in sorted(_acceptance):
        terminalreporter.write_line(f"{status} {name}" + (f"  [{measured}]" if measured else ""))
