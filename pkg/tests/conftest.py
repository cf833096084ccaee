import numpy as np
import pytest

from mpw.mpw_config import SolveOptions, SystemParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)


@pytest.fixture
def opts():
    return SolveOptions()


@pytest.fixture
def lanczos_opts():
    # forces the Krylov path even for tiny bases
    return SolveOptions(dense_threshold=0, krylov_size=40, max_iterations=2000)


@pytest.fixture
def product_params():
    return SystemParams(n_f=2, n_b=2, eps_f=1.0, eps_b=1.0)


@pytest.fixture
def coupled_params():
    return SystemParams(n_f=2, n_b=2, eps_f=1.3, eps_b=0.7, v_f=-0.4, v_b=-1.1, mu=0.6)


def random_params(rng, n):
    eps_f, eps_b = rng.uniform(0.5, 3.0, size=2)
    v_f, v_b = rng.uniform(-2.0, 0.5, size=2)
    return SystemParams(n, n, eps_f, eps_b, v_f, v_b, rng.uniform(0.0, 1.0))
