import numpy as np
import pytest
from hypothesis import settings

from diracgap.geometry import BoundaryCurve

settings.register_profile("ci", max_examples=30, deadline=None)
settings.load_profile("ci")

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


DOMAINS = {
    "disc": BoundaryCurve.disc(1.0),
    "ellipse": BoundaryCurve.ellipse(1.5, 0.75),
    "fourier": BoundaryCurve.fourier(1.0, [(3, 0.2, 0.0)]),
}


@pytest.fixture(scope="session")
def domains():
    return DOMAINS


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
