import numpy as np
import pytest

from finsler2d import kernels


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # jit compilation must not leak into runtime-budgeted tests
    kernels.warm_up()


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)
