import numpy as np
import pytest

from conelab.analysis import PipelineContext, VerifyParams
from conelab.model import ConeSpec, StepLaw

ROOT3 = np.sqrt(3.0)


@pytest.fixture(scope="session")
def nn4():
    return StepLaw(support=np.array([[1, 0], [-1, 0], [0, 1], [0, -1]]),
                   probs=np.array([1 / 8, 3 / 8, 1 / 8, 3 / 8]))


@pytest.fixture(scope="session")
def diagonal_law():
    return StepLaw(support=np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]]),
                   probs=np.array([1 / 8, 3 / 8, 1 / 4, 1 / 4]))


@pytest.fixture(scope="session")
def quadrant():
    return ConeSpec.orthant(2)


@pytest.fixture(scope="session")
def ctx(nn4, quadrant):
    """Shared pipeline on the reference model; artifacts are built lazily."""
    return PipelineContext(nn4, quadrant, VerifyParams())


@pytest.fixture(scope="session")
def cramer_nn4(ctx):
    return ctx.cramer


@pytest.fixture(scope="session")
def tables_nn4(ctx):
    return ctx.harmonic


@pytest.fixture(scope="session")
def series_nn4(ctx):
    return ctx.series


@pytest.fixture(scope="session")
def diag_ctx(diagonal_law, quadrant):
    params = VerifyParams(harmonic_window=96.0, dp_window=72, bridge_endpoint=(3, 3))
    return PipelineContext(diagonal_law, quadrant, params)
