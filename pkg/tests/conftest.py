import numpy as np
import pytest

from bracketflow import catalog


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def mu_h3():
    return catalog("h3").bracket


@pytest.fixture
def mu_s3():
    return catalog("s3").bracket


@pytest.fixture
def mu_s31():
    return catalog("s3_lambda", lam=1.0).bracket


@pytest.fixture
def mu_e2():
    return catalog("e2").bracket


@pytest.fixture
def mu_s3l05():
    return catalog("s3_lambda", lam=0.5).bracket


@pytest.fixture
def mu_heis5():
    return catalog("heisenberg", dim=5).bracket


@pytest.fixture
def catalog_three_dim():
    return [
        catalog("h3"),
        catalog("s3"),
        catalog("s3_lambda", lam=1.0),
        catalog("s3_lambda", lam=0.5),
        catalog("s3_lambda_prime", lam=0.7),
        catalog("e2"),
    ]
