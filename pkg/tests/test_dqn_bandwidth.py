"""Tests for the bandwidth agent."""

import dataclasses

import numpy as np
import pytest

from uavalloc.agents.dqn_bandwidth import (
    MODEL_FILENAME,
    DqnAction,
    DqnAgent,
    DqnObservation,
    dqn_allocate_blocks,
    dqn_allocate_blocks_batch,
    dqn_env_reset,
    dqn_env_step,
    dqn_reward,
    dqn_select_action,
    dqn_train,
    dqn_update,
    power_ceiling,
)
from uavalloc.core.config import default_config
from uavalloc.core.errors import InvalidArgumentError, NotReadyError
from uavalloc.learning.neural import ParamSet, forward, mlp_init
from uavalloc.learning.rl_core import ReplayBuffer, Transition
from uavalloc.model.channel import link_states, minimal_blocks


@pytest.fixture
def dqn_cfg():
    return dataclasses.replace(
        default_config().dqn, hidden=(8,), batch_size=4, learning_starts=4
    )


def _constant_qnet(add: float, remove: float) -> ParamSet:
    """A Q-network that ignores its input and returns fixed values."""
    net = mlp_init([4, 8, 2], ("relu", "linear"), rng_seed=0)
    return ParamSet(
        (np.zeros((8, 4)), np.zeros((2, 8))),
        (np.zeros(8), np.array([add, remove])),
        net.activations,
    )


@pytest.mark.parametrize(
    "ratio, reward", [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (1.5, 1.25), (2.0, 1.0)]
)
def test_dqn_reward(ratio, reward):
    assert dqn_reward(ratio) == pytest.approx(reward)


def test_observation_validation():
    with pytest.raises(InvalidArgumentError):
        DqnObservation(-0.1, 1, 0.0, 0.0, 1.0e6)
    with pytest.raises(InvalidArgumentError):
        DqnObservation(0.1, 1, 0.0, 0.0, 0.0)


def test_features_are_normalised(origin_scenario, dqn_cfg):
    agent = DqnAgent(origin_scenario, dqn_cfg)
    obs = DqnObservation(0.5, 50, 100.0, -50.0, 1.0e6)
    assert agent.features(obs).tolist() == [0.5, -0.25, 0.5, 0.25]
    assert power_ceiling(dqn_cfg, origin_scenario) == 1.0
    capped = dataclasses.replace(dqn_cfg, p_max=0.05)
    assert power_ceiling(capped, origin_scenario) == 0.05


def test_env_reset_ranges(small_scenario, rng):
    for _ in range(50):
        obs = dqn_env_reset(small_scenario, rng, 0.0005, 0.05, init_blocks_max=20)
        assert 0.0005 <= obs.power <= 0.05
        assert 1 <= obs.bandwidth_blocks <= 20
        assert np.hypot(obs.x, obs.y) <= small_scenario.radius_m
        assert obs.threshold_bps == 1.0e6


def test_env_step_terminates_at_minimal_blocks(origin_scenario):
    obs = DqnObservation(0.02, 78, 0.0, 0.0, 1.0e6)
    nxt, reward, done = dqn_env_step(obs, DqnAction.ADD, origin_scenario)
    assert nxt.bandwidth_blocks == 79
    assert done is True
    assert 1.0 <= reward <= 1.01

    back, reward, done = dqn_env_step(nxt, DqnAction.REMOVE, origin_scenario)
    assert back.bandwidth_blocks == 78
    assert done is False
    assert reward < 1.0


def test_env_step_not_done_above_minimum(origin_scenario):
    obs = DqnObservation(0.02, 100, 0.0, 0.0, 1.0e6)
    nxt, _, done = dqn_env_step(obs, DqnAction.ADD, origin_scenario)
    assert nxt.bandwidth_blocks == 101
    assert done is False


def test_env_step_clips_block_range(origin_scenario):
    low = DqnObservation(0.02, 1, 0.0, 0.0, 1.0e6)
    nxt, _, _ = dqn_env_step(low, DqnAction.REMOVE, origin_scenario)
    assert nxt.bandwidth_blocks == 1
    high = DqnObservation(0.02, 200, 0.0, 0.0, 1.0e6)
    nxt, _, _ = dqn_env_step(high, DqnAction.ADD, origin_scenario)
    assert nxt.bandwidth_blocks == 200


def test_select_action(origin_scenario, dqn_cfg, rng):
    agent = DqnAgent(origin_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 0.0))
    obs = DqnObservation(0.02, 10, 0.0, 0.0, 1.0e6)
    # Ties resolve to ADD
    assert dqn_select_action(agent, obs, 0.0, rng) == DqnAction.ADD

    agent = DqnAgent(origin_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 1.0))
    assert dqn_select_action(agent, obs, 0.0, rng) == DqnAction.REMOVE
    picks = {dqn_select_action(agent, obs, 1.0, rng) for _ in range(100)}
    assert picks == {DqnAction.ADD, DqnAction.REMOVE}


def test_update_needs_enough_transitions(origin_scenario, dqn_cfg, rng):
    agent = DqnAgent(origin_scenario, dqn_cfg)
    buf = ReplayBuffer(100)
    for _ in range(3):
        buf.push(Transition(np.zeros(4), 0, 1.0, np.zeros(4), True))
    with pytest.raises(NotReadyError):
        dqn_update(agent, buf, rng)


def test_update_terminal_loss(origin_scenario, dqn_cfg, rng):
    cfg = dataclasses.replace(dqn_cfg, batch_size=1, learning_starts=1)
    agent = DqnAgent(origin_scenario, cfg, seed=3)
    state = np.array([0.1, 0.2, 0.3, 0.4])
    buf = ReplayBuffer(10)
    buf.push(Transition(state, 1, 1.0, state, True))
    q_before = forward(agent.qnet, state)[1]
    loss = dqn_update(agent, buf, rng)
    assert loss == pytest.approx((q_before - 1.0) ** 2)
    assert agent.updates == 1
    # Hard target update with tau = 1
    assert np.array_equal(agent.target.weights[0], agent.qnet.weights[0])
    # The update moves Q(s, a) towards the target
    assert abs(forward(agent.qnet, state)[1] - 1.0) < abs(q_before - 1.0)


def test_update_clears_memo(origin_scenario, dqn_cfg, rng):
    cfg = dataclasses.replace(dqn_cfg, batch_size=1, learning_starts=1)
    agent = DqnAgent(origin_scenario, cfg)
    dqn_allocate_blocks(agent, 0.02, (0.0, 0.0), 1.0e6)
    assert agent.cache_size == 1
    buf = ReplayBuffer(10)
    buf.push(Transition(np.zeros(4), 0, 0.5, np.zeros(4), False))
    dqn_update(agent, buf, rng)
    assert agent.cache_size == 0


def test_always_add_policy_finds_minimal_blocks(origin_scenario, dqn_cfg):
    agent = DqnAgent(origin_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 0.0))
    (link,) = link_states(origin_scenario)
    env = origin_scenario.constants
    for power in (0.02, 0.1, 0.5, 1.0):
        decision = dqn_allocate_blocks(agent, power, (0.0, 0.0), 1.0e6)
        assert decision.saturated is False
        assert decision.blocks == minimal_blocks(link, power, 1.0e6, env, 1600.0, 200)


def test_block_count_follows_each_threshold(origin_scenario, dqn_cfg):
    agent = DqnAgent(origin_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 0.0))
    (link,) = link_states(origin_scenario)
    env = origin_scenario.constants
    counts = []
    for threshold in (5.0e5, 2.0e6):
        decision = dqn_allocate_blocks(agent, 0.1, (0.0, 0.0), threshold)
        assert decision.saturated is False
        assert decision.blocks == minimal_blocks(link, 0.1, threshold, env, 1600.0, 200)
        counts.append(decision.blocks)
    assert counts[0] < counts[1]


def test_unreachable_threshold_saturates(origin_scenario, dqn_cfg):
    agent = DqnAgent(origin_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 0.0))
    decision = dqn_allocate_blocks(agent, 0.001, (0.0, 0.0), 1.0e6)
    assert decision.saturated is True
    assert decision.blocks == 200

    zero = dqn_allocate_blocks(agent, 0.0, (0.0, 0.0), 1.0e6)
    assert zero.saturated is True


def test_remove_policy_saturates_unless_one_block_suffices(origin_scenario, dqn_cfg):
    agent = DqnAgent(origin_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 1.0))
    assert dqn_allocate_blocks(agent, 0.5, (0.0, 0.0), 1.0e6).saturated is True
    served_at_one = dqn_allocate_blocks(agent, 0.5, (0.0, 0.0), threshold=1000.0)
    assert served_at_one.blocks == 1
    assert served_at_one.saturated is False


def test_batch_requests_are_memoised(small_scenario, dqn_cfg):
    agent = DqnAgent(small_scenario, dqn_cfg, qnet=_constant_qnet(0.0, 0.0))
    powers = np.array([0.3, 0.3, 0.4])
    positions = np.array([[10.0, 10.0], [10.0, 10.0], [-50.0, 20.0]])
    first = dqn_allocate_blocks_batch(agent, powers, positions, 1.0e6)
    assert agent.cache_size == 2
    assert first.blocks[0] == first.blocks[1]
    again = dqn_allocate_blocks_batch(agent, powers, positions, 1.0e6)
    assert np.array_equal(first.blocks, again.blocks)
    assert np.array_equal(first.saturated, again.saturated)

    # Powers are rounded before lookup
    nudged = dqn_allocate_blocks_batch(
        agent, powers + 1e-7, positions, np.full(3, 1.0e6)
    )
    assert agent.cache_size == 2
    assert np.array_equal(first.blocks, nudged.blocks)

    with pytest.raises(InvalidArgumentError):
        dqn_allocate_blocks_batch(agent, -powers, positions, 1.0e6)
    with pytest.raises(InvalidArgumentError):
        dqn_allocate_blocks_batch(agent, powers[:2], positions, 1.0e6)


def test_train_is_deterministic(small_scenario, tiny_config):
    cfg = tiny_config.dqn
    first = dqn_train(small_scenario, cfg, seed=5, log_every=2)
    second = dqn_train(small_scenario, cfg, seed=5, log_every=2)
    assert len(first.log) == cfg.episodes
    assert first.log == second.log
    assert first.losses == second.losses
    assert np.array_equal(first.agent.qnet.weights[0], second.agent.qnet.weights[0])
    assert all(1 <= r.steps_to_terminal <= cfg.max_steps for r in first.log)
    for r in first.log:
        assert r.discounted_return <= 1.25 * r.steps_to_terminal
        if r.steps_to_terminal == 1:
            assert r.discounted_return == r.final_reward

    other = dqn_train(small_scenario, cfg, seed=6, log_every=2)
    assert other.log != first.log


def test_save_and_load(tmp_path, small_scenario, dqn_cfg):
    agent = DqnAgent(small_scenario, dqn_cfg, seed=2)
    path = agent.save(tmp_path)
    assert path.name == MODEL_FILENAME
    loaded = DqnAgent.load(path, small_scenario, dqn_cfg)
    obs = DqnObservation(0.1, 20, 30.0, 40.0, 1.0e6)
    assert np.array_equal(loaded.q_values(obs), agent.q_values(obs))


def test_agent_rejects_wrong_network(small_scenario, dqn_cfg):
    with pytest.raises(InvalidArgumentError):
        DqnAgent(small_scenario, dqn_cfg, qnet=mlp_init([3, 4, 2], "linear", 0))
