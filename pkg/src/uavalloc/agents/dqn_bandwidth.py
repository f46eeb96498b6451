"""Bandwidth agent: a per-user episodic environment and its deep Q-learner.

Each episode places one terminal somewhere in the field with a random power
and block count. The two actions add or remove one resource block and the
episode ends at the smallest block count that meets the terminal's rate
threshold. The trained network is then queried greedily from one block to
size every user's bandwidth request.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..core.config import DqnConfig
from ..core.errors import (
    InvalidArgumentError,
    NotReadyError,
    TrainingDivergenceError,
    logger,
)
from ..core.interfaces import BlockRequests
from ..learning.neural import (
    Optimizer,
    ParamSet,
    backward,
    forward,
    layer_activations,
    load_params,
    mlp_init,
    save_params,
    soft_update,
)
from ..learning.rl_core import (
    EpsilonSchedule,
    ReplayBuffer,
    Transition,
    derive_seed,
    discounted_return,
    epsilon_at,
    sample_minibatch,
    td_targets,
)
from ..model.channel import expected_rates
from ..model.scenario import Scenario, sample_disk_points

STATE_DIM = 4
MODEL_FILENAME = "dqn_qnet.uavmlp"


class DqnAction(IntEnum):
    """Block adjustment actions."""

    ADD = 0
    REMOVE = 1


@dataclass(frozen=True)
class DqnObservation:
    """Power, current blocks and position of one terminal, plus its threshold.

    The threshold drives the reward but is not a network feature.
    """

    power: float
    bandwidth_blocks: int
    x: float
    y: float
    threshold_bps: float

    def __post_init__(self) -> None:
        if self.power < 0:
            raise InvalidArgumentError("power must be non-negative")
        if self.bandwidth_blocks < 0:
            raise InvalidArgumentError("bandwidth_blocks must be non-negative")
        if self.threshold_bps <= 0:
            raise InvalidArgumentError("threshold_bps must be positive")


@dataclass(frozen=True)
class DqnEpisodeResult:
    """Summary of one training episode."""

    episode: int
    steps_to_terminal: int
    final_blocks: int
    final_reward: float
    discounted_return: float
    epsilon: float
    truncated: bool


@dataclass(frozen=True)
class BlockDecision:
    """Greedy block count for one terminal; saturated if the rollout was cut."""

    blocks: int
    saturated: bool


def power_ceiling(cfg: DqnConfig, scenario: Scenario) -> float:
    """Upper end of the reset power range; 0 in config means the power budget."""
    return cfg.p_max if cfg.p_max > 0 else scenario.budgets.total_power


class DqnAgent:
    """Q-network, target network, optimizer, state normaliser and memo cache."""

    def __init__(
        self,
        scenario: Scenario,
        cfg: DqnConfig,
        seed: int = 0,
        qnet: Optional[ParamSet] = None,
    ):
        self.scenario = scenario
        self.cfg = cfg
        self.seed = seed
        self.p_max = power_ceiling(cfg, scenario)
        sizes = [STATE_DIM, *cfg.hidden, len(DqnAction)]
        self.qnet = qnet or mlp_init(
            sizes,
            layer_activations(len(sizes) - 1, "relu", "linear"),
            derive_seed(seed, "dqn.init"),
        )
        if self.qnet.layer_sizes[0] != STATE_DIM or self.qnet.n_outputs != 2:
            raise InvalidArgumentError(
                f"Q-network must map {STATE_DIM} inputs to 2 actions, "
                f"got {self.qnet.layer_sizes}"
            )
        self.target = soft_update(self.qnet, self.qnet, 1.0)
        self.optimizer = Optimizer(cfg.optimizer, cfg.learning_rate, self.qnet)
        self.updates = 0
        self._memo: dict[tuple[float, float, float, float], BlockDecision] = {}

    def features(self, obs: DqnObservation) -> np.ndarray:
        """Normalised network input: x/R, y/R, P/p_max, B/n_blocks."""
        return self.feature_matrix(
            np.array([obs.power]),
            np.array([obs.bandwidth_blocks]),
            np.array([obs.x]),
            np.array([obs.y]),
        )[0]

    def feature_matrix(
        self, powers: np.ndarray, blocks: np.ndarray, x: np.ndarray, y: np.ndarray
    ) -> np.ndarray:
        r = self.scenario.radius_m
        return np.column_stack(
            (x / r, y / r, powers / self.p_max, blocks / self.scenario.budgets.n_blocks)
        ).astype(np.float64)

    def q_values(self, obs: DqnObservation) -> np.ndarray:
        return forward(self.qnet, self.features(obs))

    def clear_cache(self) -> None:
        self._memo.clear()

    @property
    def cache_size(self) -> int:
        return len(self._memo)

    def save(self, directory: Union[str, Path]) -> Path:
        return save_params(self.qnet, Path(directory) / MODEL_FILENAME)

    @classmethod
    def load(
        cls, path: Union[str, Path], scenario: Scenario, cfg: DqnConfig
    ) -> "DqnAgent":
        return cls(scenario, cfg, qnet=load_params(path))


def dqn_reward(ratio: float) -> float:
    """Rate ratio minus the squared overshoot when the ratio exceeds one."""
    if ratio > 1.0:
        return ratio - (ratio - 1.0) ** 2
    return ratio


def dqn_env_reset(
    scenario: Scenario,
    rng: np.random.Generator,
    p_min: float = 0.0005,
    p_max: float = 0.05,
    init_blocks_max: int = 0,
) -> DqnObservation:
    """Start an episode from a random power, position and block count.

    Args:
        scenario: Field, constants and budgets
        rng: Environment stream
        p_min: Lower end of the power range
        p_max: Upper end of the power range
        init_blocks_max: Largest initial block count; 0 means ``n_blocks``

    Returns:
        The initial observation; the threshold is drawn from the
        scenario's users
    """
    n_blocks = scenario.budgets.n_blocks
    hi = min(init_blocks_max, n_blocks) if init_blocks_max > 0 else n_blocks
    power = float(rng.uniform(p_min, p_max))
    x, y = sample_disk_points(1, scenario.radius_m, rng)
    blocks = int(rng.integers(1, hi + 1))
    user = scenario.users[int(rng.integers(scenario.n_users))]
    return DqnObservation(
        power=power,
        bandwidth_blocks=blocks,
        x=float(x[0]),
        y=float(y[0]),
        threshold_bps=user.rate_threshold_bps,
    )


def dqn_env_step(
    obs: DqnObservation, a: DqnAction, scenario: Scenario
) -> tuple[DqnObservation, float, bool]:
    """Apply one block adjustment.

    The episode is done when the new block count meets the threshold and one
    block fewer would not.

    Returns:
        The next observation, the reward and the done flag
    """
    n_blocks = scenario.budgets.n_blocks
    delta = 1 if a == DqnAction.ADD else -1
    blocks = min(max(obs.bandwidth_blocks + delta, 1), n_blocks)
    below, at = expected_rates(
        scenario, obs.x, obs.y, obs.power, np.array([blocks - 1, blocks])
    )
    done = bool(at >= obs.threshold_bps and below < obs.threshold_bps)
    reward = dqn_reward(float(at) / obs.threshold_bps)
    nxt = DqnObservation(obs.power, blocks, obs.x, obs.y, obs.threshold_bps)
    return nxt, reward, done


def _greedy(q: np.ndarray) -> np.ndarray:
    return np.where(q[..., 0] >= q[..., 1], DqnAction.ADD, DqnAction.REMOVE)


def dqn_select_action(
    agent: DqnAgent, obs: DqnObservation, eps: float, rng: np.random.Generator
) -> DqnAction:
    """Epsilon-greedy action; equal Q-values resolve to ``ADD``."""
    if rng.random() < eps:
        return DqnAction(int(rng.integers(len(DqnAction))))
    return DqnAction(int(_greedy(agent.q_values(obs))))


def dqn_update(
    agent: DqnAgent, buffer: ReplayBuffer, rng: np.random.Generator
) -> float:
    """One gradient step on the mean squared TD error of a sampled minibatch.

    Raises:
        NotReadyError: If the buffer is below ``learning_starts`` or the batch
            size
        TrainingDivergenceError: If the loss is not finite
    """
    cfg = agent.cfg
    needed = max(cfg.batch_size, cfg.learning_starts)
    if len(buffer) < needed:
        raise NotReadyError(f"Replay buffer holds {len(buffer)}, need {needed}")
    batch = sample_minibatch(buffer, cfg.batch_size, rng)
    rows = np.arange(len(batch))
    q = forward(agent.qnet, batch.states)
    next_q = forward(agent.target, batch.next_states).max(axis=1)
    y = td_targets(batch.rewards, next_q, batch.terminals, cfg.gamma)
    diff = q[rows, batch.actions] - y
    loss = float(np.mean(diff**2))
    if not np.isfinite(loss):
        raise TrainingDivergenceError(f"DQN loss became {loss}")
    upstream = np.zeros_like(q)
    upstream[rows, batch.actions] = 2.0 * diff / len(batch)
    agent.qnet = agent.optimizer.step(
        agent.qnet, backward(agent.qnet, batch.states, upstream)
    )
    agent.target = soft_update(agent.target, agent.qnet, cfg.tau)
    agent.updates += 1
    agent.clear_cache()
    return loss


@dataclass
class DqnTrainingRun:
    """A trained agent and its per-episode log."""

    agent: DqnAgent
    log: list[DqnEpisodeResult] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)


def dqn_train(
    scenario: Scenario,
    cfg: DqnConfig,
    seed: int = 0,
    episodes: Optional[int] = None,
    max_steps: Optional[int] = None,
    log_every: int = 100,
) -> DqnTrainingRun:
    """Train the bandwidth agent.

    Args:
        scenario: Field, constants and budgets
        cfg: Agent hyperparameters
        seed: Root seed; init, environment, action and replay streams are
            derived from it
        episodes: Episode budget, defaults to ``cfg.episodes``
        max_steps: Step cap per episode, defaults to ``cfg.max_steps``
        log_every: Progress logging period in episodes

    Returns:
        The trained agent with its episode log

    Raises:
        TrainingDivergenceError: If a loss or gradient stops being finite
    """
    episodes = cfg.episodes if episodes is None else episodes
    max_steps = cfg.max_steps if max_steps is None else max_steps
    agent = DqnAgent(scenario, cfg, seed)
    env_rng = np.random.default_rng(derive_seed(seed, "dqn.env"))
    act_rng = np.random.default_rng(derive_seed(seed, "dqn.act"))
    replay_rng = np.random.default_rng(derive_seed(seed, "dqn.replay"))
    schedule = EpsilonSchedule.for_budget(
        cfg.eps_start, cfg.eps_end, cfg.eps_fraction, episodes * max_steps
    )
    logger.info(
        "DQN: %d episodes x %d steps, epsilon %.2f->%.2f over %d steps, "
        "layers %s, reset power [%g, %g]",
        episodes,
        max_steps,
        cfg.eps_start,
        cfg.eps_end,
        schedule.decay_horizon,
        agent.qnet.layer_sizes,
        cfg.p_min,
        agent.p_max,
    )
    buffer = ReplayBuffer(cfg.buffer_size)
    run = DqnTrainingRun(agent)
    total_steps = 0
    for episode in range(1, episodes + 1):
        obs = dqn_env_reset(
            scenario, env_rng, cfg.p_min, agent.p_max, cfg.init_blocks_max
        )
        state = agent.features(obs)
        reward, done, steps, eps = 0.0, False, 0, schedule.eps_start
        rewards: list[float] = []
        while steps < max_steps and not done:
            eps = epsilon_at(schedule, total_steps)
            action = dqn_select_action(agent, obs, eps, act_rng)
            obs, reward, done = dqn_env_step(obs, action, scenario)
            rewards.append(reward)
            next_state = agent.features(obs)
            buffer.push(Transition(state, int(action), reward, next_state, done))
            state = next_state
            steps += 1
            total_steps += 1
            if total_steps % cfg.train_freq == 0 and len(buffer) >= max(
                cfg.batch_size, cfg.learning_starts
            ):
                try:
                    run.losses.append(dqn_update(agent, buffer, replay_rng))
                except TrainingDivergenceError as e:
                    raise TrainingDivergenceError(
                        f"DQN diverged in episode {episode}, step {steps}: {e}"
                    ) from e
        run.log.append(
            DqnEpisodeResult(
                episode=episode,
                steps_to_terminal=steps,
                final_blocks=obs.bandwidth_blocks,
                final_reward=reward,
                discounted_return=discounted_return(rewards, cfg.gamma),
                epsilon=eps,
                truncated=not done,
            )
        )
        if episode % log_every == 0:
            recent = run.log[-log_every:]
            logger.info(
                "DQN episode %d: mean steps %.1f, truncated %d, epsilon %.3f",
                episode,
                np.mean([r.steps_to_terminal for r in recent]),
                sum(r.truncated for r in recent),
                eps,
            )
    agent.clear_cache()
    return run


def _memo_key(
    decimals: int, power: float, x: float, y: float, threshold: float
) -> tuple[float, float, float, float]:
    return (
        round(power, decimals),
        round(x, decimals),
        round(y, decimals),
        float(threshold),
    )


def dqn_allocate_blocks_batch(
    agent: DqnAgent,
    powers: np.ndarray,
    positions: np.ndarray,
    thresholds: np.ndarray,
) -> BlockRequests:
    """Greedy block requests for many terminals at once.

    Powers (and positions) are rounded to ``power_decimals`` places before
    they enter the network, and results are memoised on the rounded key.
    Rollouts start at one block; a start that already meets the threshold is
    terminal. A rollout still running after ``n_blocks`` steps is cut and
    reported as saturated with ``n_blocks`` blocks.

    Args:
        agent: Trained bandwidth agent
        powers: Transmit power per terminal
        positions: ``(M, 2)`` terminal coordinates
        thresholds: Rate threshold per terminal

    Returns:
        Requested blocks and saturation flags
    """
    powers = np.asarray(powers, dtype=np.float64)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    thresholds = np.broadcast_to(
        np.asarray(thresholds, dtype=np.float64), powers.shape
    )
    if positions.shape[0] != powers.shape[0]:
        raise InvalidArgumentError("powers and positions differ in length")
    if np.any(powers < 0):
        raise InvalidArgumentError("powers must be non-negative")
    n_blocks = agent.scenario.budgets.n_blocks
    decimals = agent.cfg.power_decimals
    keys = [
        _memo_key(decimals, p, x, y, t)
        for p, (x, y), t in zip(powers, positions, thresholds)
    ]
    blocks = np.empty(len(keys), dtype=np.int64)
    saturated = np.zeros(len(keys), dtype=bool)
    pending: dict[tuple[float, float, float, float], list[int]] = {}
    for i, key in enumerate(keys):
        hit = agent._memo.get(key)
        if hit is not None:
            blocks[i], saturated[i] = hit.blocks, hit.saturated
        else:
            pending.setdefault(key, []).append(i)

    if pending:
        todo = list(pending)
        p = np.array([k[0] for k in todo])
        x = np.array([k[1] for k in todo])
        y = np.array([k[2] for k in todo])
        th = np.array([k[3] for k in todo])
        cur = np.ones(len(todo), dtype=np.int64)
        done = (expected_rates(agent.scenario, x, y, p, cur) >= th) & (p > 0)
        for _ in range(n_blocks):
            live = np.flatnonzero(~done & (p > 0))
            if live.size == 0:
                break
            q = forward(
                agent.qnet, agent.feature_matrix(p[live], cur[live], x[live], y[live])
            )
            step = np.where(_greedy(q) == DqnAction.ADD, 1, -1)
            cur[live] = np.clip(cur[live] + step, 1, n_blocks)
            rates = expected_rates(
                agent.scenario,
                x[live, None],
                y[live, None],
                p[live, None],
                np.column_stack((cur[live] - 1, cur[live])),
            )
            done[live] = (rates[:, 1] >= th[live]) & (rates[:, 0] < th[live])
        for j, key in enumerate(todo):
            decision = (
                BlockDecision(int(cur[j]), False)
                if done[j]
                else BlockDecision(n_blocks, True)
            )
            agent._memo[key] = decision
            for i in pending[key]:
                blocks[i], saturated[i] = decision.blocks, decision.saturated
    return BlockRequests(blocks=blocks, saturated=saturated)


def dqn_allocate_blocks(
    agent: DqnAgent,
    power: float,
    position: tuple[float, float],
    threshold: float,
) -> BlockDecision:
    """Greedy block count for one terminal with its own rate threshold."""
    req = dqn_allocate_blocks_batch(
        agent, np.array([power]), np.array([position]), np.array([threshold])
    )
    return BlockDecision(int(req.blocks[0]), bool(req.saturated[0]))
