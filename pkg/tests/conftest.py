import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from metashape.config import load_preset
from metashape.shapes import ShapeKind, WavepacketShape

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile("default")


@st.composite
def shapes(draw, gamma=(0.1, 10.0), center=(-10.0, 10.0), detuning=(-5.0, 5.0)):
    kind = draw(st.sampled_from(list(ShapeKind)))
    return WavepacketShape(
        kind,
        draw(st.floats(*gamma)),
        draw(st.floats(*center)),
        draw(st.floats(*detuning)),
    )


def random_unitary(rng, dim):
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture(scope="session")
def fig2():
    return load_preset("fig2").scheme


@pytest.fixture(scope="session")
def fig3_er():
    return load_preset("fig3_er").scheme


@pytest.fixture(scope="session")
def fig3_ed():
    return load_preset("fig3_ed").scheme


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
