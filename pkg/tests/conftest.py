import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def synthetic_data():
    from regimedep.synthetic import generate

    return generate(2028)


@pytest.fixture(scope="session")
def synthetic_files(synthetic_data, tmp_path_factory):
    return synthetic_data.write(tmp_path_factory.mktemp("synthetic"))


@pytest.fixture(scope="session")
def synthetic_panel(synthetic_files):
    from regimedep.ingest import align_and_log_returns, load_price_table

    return align_and_log_returns(load_price_table(synthetic_files[0]))


SMALL_SYNTHETIC = dict(start="2004-01-01", end="2007-12-31")


@pytest.fixture(scope="session")
def small_files(tmp_path_factory):
    """Four years of the synthetic design (change date 2006-01-01)."""
    from regimedep.synthetic import SyntheticConfig, generate

    return generate(2028, SyntheticConfig(**SMALL_SYNTHETIC)).write(tmp_path_factory.mktemp("small"))


@pytest.fixture
def small_config_dict(small_files):
    """Cheap full-pipeline settings on the small dataset."""
    prices, ann = small_files
    return {
        "seed": 5,
        "data": {"prices": str(prices), "announcements": str(ann)},
        "marginals": {"p_grid": [1], "q_grid": [1], "families": ["student_t"], "restarts": 0},
        "copulas": {"families": ["gaussian", "clayton", "frank"]},
        "functionals": {"nodes": 64},
        "independence": {"permutations": 99},
    }
