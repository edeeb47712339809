import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from cat1prox.functions import standard_catalog  # noqa: E402
from cat1prox.geometry import AdmissibleSpace, DEFAULT_RADIUS  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def space():
    return AdmissibleSpace.default()


@pytest.fixture(scope="session")
def catalog(space):
    return standard_catalog(space)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def ball_points(draw, radius=DEFAULT_RADIUS):
    """Area-uniform-ish points of the default ball about e3."""
    u = draw(st.floats(0.0, 1.0))
    ang = draw(st.floats(0.0, 2 * math.pi))
    d = math.acos(1.0 - u * (1.0 - math.cos(radius)))
    return np.array([math.sin(d) * math.cos(ang), math.sin(d) * math.sin(ang), math.cos(d)])


alphas = st.floats(0.0, 1.0)
lambdas = st.floats(1e-2, 1e2)
