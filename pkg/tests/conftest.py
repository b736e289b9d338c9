import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

import meanderwalk as mw
from meanderwalk import walk, verify

settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def srw_env():
    return mw.Environment.generate(mw.srw_params(-64, 320))


@pytest.fixture(scope="session")
def srw_env_large():
    return mw.Environment.generate(mw.srw_params(-1300, 1600))


@pytest.fixture(scope="session")
def rand2_env():
    params = mw.EnvironmentParams(
        kappa=0.5, k_bound=2.0, beta=1.0, r_max=2,
        x_min=-48, x_max=48, generator_kind="iid_uniform", seed=301,
    )
    return mw.Environment.generate(params)


@pytest.fixture(scope="session")
def rand3_env():
    params = mw.EnvironmentParams(
        kappa=0.5, k_bound=2.0, beta=1.0, r_max=3,
        x_min=-400, x_max=400, generator_kind="iid_uniform", seed=911,
    )
    return mw.Environment.generate(params)


@pytest.fixture(scope="session")
def rand3_env_large():
    params = mw.EnvironmentParams(
        kappa=0.5, k_bound=2.0, beta=1.0, r_max=3,
        x_min=-1250, x_max=1600, generator_kind="iid_uniform", seed=911,
    )
    return mw.Environment.generate(params)


@pytest.fixture(scope="session")
def rand8_env():
    params = mw.EnvironmentParams(
        kappa=0.3, k_bound=2.0, beta=0.5, r_max=8,
        x_min=-80, x_max=180, generator_kind="iid_uniform", seed=75,
    )
    return mw.Environment.generate(params)


@pytest.fixture(scope="session")
def markov3_env():
    params = mw.EnvironmentParams(
        kappa=0.5, k_bound=2.0, beta=1.0, r_max=3,
        x_min=-1250, x_max=1300, generator_kind="markov_modulated", seed=404,
    )
    return mw.Environment.generate(params)


# -- heavy shared batches for the acceptance suite --------------------------

ACC_N = 4096
ACC_M = 20000
ACC_SLICES = (1024, 2048, 3072, 4096, 40, 81, 163)


@pytest.fixture(scope="session")
def srw_meander_batch(srw_env_large):
    _, table = walk.survival_probability(srw_env_large, ACC_N)
    recs = walk.sample_meander_batch(table, ACC_M, seed=3, record_steps=ACC_SLICES)
    return {"table": table, "recs": recs, "sigma": 1.0}


@pytest.fixture(scope="session")
def rand3_meander_batch(rand3_env_large):
    sigma, _ = verify.resolve_sigma(rand3_env_large, 0)
    _, table = walk.survival_probability(rand3_env_large, ACC_N)
    recs = walk.sample_meander_batch(table, ACC_M, seed=3, record_steps=ACC_SLICES)
    return {"table": table, "recs": recs, "sigma": sigma}
