import numpy as np
import pytest

from finslerarea import metric as M
from finslerarea.cartan import CartanIntegrand

ACCEPTANCE = {}
PROPERTY_OUTCOMES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "property: invariant/property-based test (acceptance criterion 10)")
    config.addinivalue_line("markers", "slow: runs a full Plateau solve or threshold scan")


def pytest_runtest_logreport(report):
    if report.when == "call" and "property" in report.keywords:
        PROPERTY_OUTCOMES.append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        tr.write_line(ACCEPTANCE[k])
    if PROPERTY_OUTCOMES:
        ok = all(PROPERTY_OUTCOMES)
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] 10 property suites: "
                      f"{sum(PROPERTY_OUTCOMES)}/{len(PROPERTY_OUTCOMES)} property tests passed")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def randers03():
    return M.randers([0.3, 0.0, 0.0])


@pytest.fixture(scope="session")
def ci_euclid():
    return CartanIntegrand(M.euclidean())


@pytest.fixture(scope="session")
def ci_randers03(randers03):
    return CartanIntegrand(randers03)


def randers_area(b, Z):
    """|Z| (1 - c^2)^(3/2), c^2 = |b|^2 - (b.Zhat)^2."""
    b = np.asarray(b, float)
    Z = np.asarray(Z, float)
    nz = np.linalg.norm(Z, axis=-1)
    c2 = np.sum(b * b, axis=-1) - (np.sum(b * Z, axis=-1) / nz) ** 2
    return nz * (1.0 - c2) ** 1.5
