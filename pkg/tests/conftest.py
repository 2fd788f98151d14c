import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import binsampler as bs
from oracles import reference_evolution

# One CPU, no deadline slack: hypothesis timing checks would flake here.
settings.register_profile(
    "slowbox",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("slowbox")


@pytest.fixture(scope="session")
def small_instance():
    """n=10 workhorse; oracle size 86."""
    return bs.new_instance([9, 78, 66, 44, 44, 86, 9, 70, 21, 10], 100)


@pytest.fixture(scope="session")
def n2_setup():
    """Tiny instance + moderate config + continuous-time reference state."""
    inst = bs.new_instance([1, 2], 2)
    config = bs.default_config(inst, profile="moderate")
    energies = bs.build_diagonal(inst, config.alpha, config.beta).energies
    ref = reference_evolution(inst, config, energies, substeps=200_000)
    return inst, config, ref


@pytest.fixture(scope="session")
def n4_setup():
    inst = bs.new_instance([3, 5, 2, 4], 8)
    config = bs.default_config(inst, profile="moderate")
    energies = bs.build_diagonal(inst, config.alpha, config.beta).energies
    ref = reference_evolution(inst, config, energies, substeps=50_000)
    return inst, config, ref


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(20260815))
