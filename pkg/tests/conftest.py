import numpy as np
import pytest

from uavalloc.core.config import default_config
from uavalloc.model.scenario import Budgets, EnvConstants, GroundUser, Scenario

# Small enough to train both agents in well under a second
TINY_OVERRIDES = {
    "scenario.n_users": 3,
    "scenario.n_blocks": 150,
    "dqn.episodes": 4,
    "dqn.max_steps": 15,
    "dqn.batch_size": 8,
    "dqn.learning_starts": 8,
    "dqn.buffer_size": 1000,
    "dqn.hidden": [8],
    "ddpg.episodes": 2,
    "ddpg.max_steps": 5,
    "ddpg.batch_size": 4,
    "ddpg.learning_starts": 4,
    "ddpg.buffer_size": 1000,
    "ddpg.hidden": [8],
    "experiment.seeds": [0],
    "experiment.eval_episodes": 1,
    "experiment.convergence_window": 2,
    "experiment.log_every": 1,
}


def make_scenario(
    positions,
    n_blocks: int = 200,
    total_power: float = 1.0,
    threshold: float = 1.0e6,
    height: float = 400.0,
) -> Scenario:
    """Scenario with users at fixed positions and the default constants."""
    users = tuple(
        GroundUser(id=i + 1, x=float(x), y=float(y), rate_threshold_bps=threshold)
        for i, (x, y) in enumerate(positions)
    )
    return Scenario(
        radius_m=200.0,
        uav_height_m=height,
        users=users,
        constants=EnvConstants(),
        budgets=Budgets.from_blocks(total_power, 1600.0, n_blocks),
    )


@pytest.fixture
def scenario_at():
    """Factory for scenarios with users at chosen positions."""
    return make_scenario


@pytest.fixture
def rng():
    """Seeded generator for tests that draw random numbers."""
    return np.random.default_rng(12345)


@pytest.fixture
def origin_scenario():
    """A single user directly below the UAV."""
    return make_scenario([(0.0, 0.0)])


@pytest.fixture
def small_scenario():
    """Three users spread over the field."""
    return make_scenario([(0.0, 0.0), (120.0, 50.0), (-80.0, -150.0)], n_blocks=150)


@pytest.fixture
def tiny_config():
    """Desk-scale defaults shrunk to a few episodes of tiny networks."""
    return default_config().replace(TINY_OVERRIDES)
