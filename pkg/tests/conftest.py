import math

import pytest

from pushspace.curve_model import CurveSpec
from pushspace.pipeline import analyze

FINE = 65536


@pytest.fixture(scope="session")
def tricorner():
    return analyze(CurveSpec.tricorner(FINE))


@pytest.fixture(scope="session")
def sheared8():
    return analyze(CurveSpec.sheared(math.pi / 2 - 2 * math.pi / 8, FINE))


@pytest.fixture(scope="session")
def circle():
    return analyze(CurveSpec.circle(1.0, 4096))
