import numpy as np
import pytest

from ncsphere import Deformation, TrigPoly
from ncsphere.modes import ModeSet


def tp(*terms):
    """Small helper building x-only TrigPolys from (kind, n, coeff) triples."""
    out = TrigPoly()
    for kind, n, c in terms:
        out = out + c * (getattr(TrigPoly, kind)(n) if n else TrigPoly.const(1.0))
    return out


SAMPLE_V0 = (
    tp(("cosx", 2, 0.2), ("const", 0, 0.7), ("sinx", 1, 0.1)),
    tp(("const", 0, 0.4), ("sinx", 2, 0.15), ("cosx", 1, -0.1)),
)
SAMPLE_VC = (
    (tp(("sinx", 1, 0.3), ("cosx", 1, 0.1)), tp(("const", 0, 0.12), ("cosx", 2, 0.2))),
    (tp(("cosx", 2, 0.15), ("const", 0, -0.05)), tp(("sinx", 1, 0.22))),
    (tp(("cosx", 1, 0.05), ("sinx", 2, 0.08)), tp(("const", 0, 0.07), ("cosx", 1, 0.04))),
)
SAMPLE_VS = (
    (tp(("cosx", 1, 0.2), ("const", 0, -0.1)), tp(("sinx", 2, 0.11), ("const", 0, 0.06))),
    (tp(("sinx", 1, 0.09), ("cosx", 2, -0.07)), tp(("const", 0, 0.13), ("sinx", 1, 0.05))),
    (tp(("sinx", 2, 0.06)), tp(("cosx", 2, 0.1), ("const", 0, -0.04))),
)


@pytest.fixture(scope="session")
def sample_modeset():
    return ModeSet.from_trigpolys(SAMPLE_V0, SAMPLE_VC, SAMPLE_VS)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def d03():
    return Deformation.real(0.3)
