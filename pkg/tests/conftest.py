import warnings
from pathlib import Path

import numpy as np
import pytest

from semiriesz.group import GroupSpec, SpectralFunction
from semiriesz.spectral import CoefficientMatrix

DATA = Path(__file__).parent / "data"
SHIPPED = sorted((Path(__file__).parents[1] / "src" / "semiriesz" / "data").glob("*.yaml"))


def torus_case(seed: int, spec: GroupSpec = GroupSpec((3,), 1, 2)):
    """Seeded (f, g, alpha): sparse f, g sharing f's support plus two extra terms."""
    rng = np.random.default_rng(1000 + seed)
    f = SpectralFunction.random(spec, rng, n_terms=3)
    g = SpectralFunction(spec, f.coeffs + SpectralFunction.random(spec, rng, n_terms=2).coeffs)
    alpha = CoefficientMatrix.random(spec, rng)
    return f, g, alpha


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        yield


# one PASS/FAIL line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
