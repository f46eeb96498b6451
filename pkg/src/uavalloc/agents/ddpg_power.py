"""Power agent: the whole-population environment and its DDPG learner.

An action nudges every user's power; the block allocator (the trained
bandwidth agent, or a fixed split for the power-only baseline) sizes each
user's bandwidth request, the bandwidth budget admits the cheapest requests
first and the reward is the number of served users minus a penalty for
overrunning the power budget.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Union

import numpy as np

from ..core.config import DdpgConfig
from ..core.errors import (
    InvalidArgumentError,
    NotReadyError,
    TrainingDivergenceError,
    logger,
)
from ..core.interfaces import BlockAllocator, BlockRequests
from ..learning.neural import (
    Optimizer,
    ParamSet,
    backward,
    forward,
    input_gradient,
    layer_activations,
    load_params,
    mlp_init,
    save_params,
    soft_update,
)
from ..learning.rl_core import (
    NoiseProcess,
    ReplayBuffer,
    Transition,
    derive_seed,
    discounted_return,
    noise_sample,
    sample_minibatch,
    td_targets,
)
from ..model.channel import (
    FadingMode,
    LinkState,
    expected_rates,
    link_states,
    user_rates,
)
from ..model.scenario import Scenario
from .dqn_bandwidth import DqnAgent, dqn_allocate_blocks_batch

ACTOR_FILENAME = "ddpg_actor.uavmlp"
CRITIC_FILENAME = "ddpg_critic.uavmlp"


class DqnBlockAllocator:
    """Block requests from the trained bandwidth agent."""

    def __init__(self, agent: DqnAgent, scenario: Scenario):
        self.agent = agent
        self.positions = scenario.positions
        self.thresholds = scenario.thresholds

    def request_blocks(self, powers: np.ndarray) -> BlockRequests:
        return dqn_allocate_blocks_batch(
            self.agent, powers, self.positions, self.thresholds
        )


class FixedBlockAllocator:
    """The same block count for every user, whatever its power."""

    def __init__(self, scenario: Scenario, blocks_per_user: Optional[int] = None):
        self.scenario = scenario
        self.blocks_per_user = (
            scenario.budgets.n_blocks // scenario.n_users
            if blocks_per_user is None
            else blocks_per_user
        )
        if self.blocks_per_user < 0:
            raise InvalidArgumentError("blocks_per_user must be non-negative")

    def request_blocks(self, powers: np.ndarray) -> BlockRequests:
        s = self.scenario
        blocks = np.full(s.n_users, self.blocks_per_user, dtype=np.int64)
        pos = s.positions
        rates = expected_rates(s, pos[:, 0], pos[:, 1], powers, blocks)
        return BlockRequests(blocks=blocks, saturated=rates < s.thresholds)


class BudgetOutcome(NamedTuple):
    """Granted blocks, served flags and served count after admission."""

    granted: np.ndarray
    served: np.ndarray
    n_s: int


def apply_bandwidth_budget(
    requested_blocks: np.ndarray,
    n_blocks: int,
    saturated: Optional[np.ndarray] = None,
) -> BudgetOutcome:
    """Admit the cheapest requests first until the next one does not fit.

    Ties are broken by user index. Admitted users receive their request and
    everyone else gets zero. A user counts as served when admitted with a
    non-zero grant and not flagged as saturated.

    Args:
        requested_blocks: Requested blocks per user
        n_blocks: Total blocks available
        saturated: Users whose threshold is unreachable at their request

    Returns:
        The granted blocks, served flags and served count
    """
    requested = np.asarray(requested_blocks, dtype=np.int64)
    if np.any(requested < 0):
        raise InvalidArgumentError("Requested blocks must be non-negative")
    sat = (
        np.zeros(requested.shape, dtype=bool)
        if saturated is None
        else np.asarray(saturated, dtype=bool)
    )
    order = np.argsort(requested, kind="stable")
    cumulative = np.cumsum(requested[order])
    fits = cumulative <= n_blocks
    n_admitted = int(np.argmin(fits)) if not fits.all() else len(order)
    admitted = np.zeros(requested.shape, dtype=bool)
    admitted[order[:n_admitted]] = True
    granted = np.where(admitted, requested, 0)
    served = admitted & ~sat & (granted > 0)
    return BudgetOutcome(granted=granted, served=served, n_s=int(served.sum()))


@dataclass(frozen=True, eq=False)
class DdpgObservation:
    """Per-user powers and granted blocks."""

    powers: np.ndarray
    blocks: np.ndarray

    def __post_init__(self) -> None:
        if self.powers.shape != self.blocks.shape:
            raise InvalidArgumentError("powers and blocks differ in length")
        if np.any(self.powers < 0) or np.any(self.blocks < 0):
            raise InvalidArgumentError("powers and blocks must be non-negative")


class StepInfo(NamedTuple):
    """Bookkeeping of one environment step."""

    n_s: int
    served: np.ndarray
    sum_power: float
    sum_blocks: int
    penalty: float


class PowerEnv:
    """Fixed-length episodes over the joint power vector.

    In sampled fading mode the link gains are redrawn once per episode and
    the served count uses those links.
    """

    def __init__(
        self,
        scenario: Scenario,
        allocator: BlockAllocator,
        cfg: DdpgConfig,
        fading: FadingMode = FadingMode(),
        max_steps: Optional[int] = None,
        release_unserved: bool = True,
    ):
        self.scenario = scenario
        self.allocator = allocator
        self.cfg = cfg
        self.fading = fading
        self.max_steps = cfg.max_steps if max_steps is None else max_steps
        self.release_unserved = release_unserved
        self.p_max = cfg.p_max if cfg.p_max > 0 else scenario.budgets.total_power
        self._fading_rng = (
            np.random.default_rng(fading.seed) if fading.is_sampled else None
        )
        self.links: tuple[LinkState, ...] = link_states(scenario)
        self.t = 0
        self.obs: Optional[DdpgObservation] = None
        self.info: Optional[StepInfo] = None

    @property
    def n_users(self) -> int:
        return self.scenario.n_users

    def vector(self, obs: DdpgObservation) -> np.ndarray:
        """Network input: powers / P_t followed by blocks / n_blocks."""
        b = self.scenario.budgets
        return np.concatenate(
            (obs.powers / b.total_power, obs.blocks / b.n_blocks)
        ).astype(np.float64)

    def evaluate(self, powers: np.ndarray) -> tuple[DdpgObservation, StepInfo]:
        """Blocks, served users and penalty for a power vector."""
        b = self.scenario.budgets
        req = self.allocator.request_blocks(powers)
        outcome = apply_bandwidth_budget(req.blocks, b.n_blocks, req.saturated)
        rates = user_rates(
            self.links, powers, outcome.granted, b.block_hz, self.scenario.constants
        )
        served = (outcome.granted > 0) & (rates >= self.scenario.thresholds)
        blocks = outcome.granted
        if self.release_unserved:
            blocks = np.where(served, blocks, 0)
        sum_power = float(powers.sum())
        penalty = max(0.0, sum_power - b.total_power) * self.cfg.power_penalty
        info = StepInfo(
            n_s=int(served.sum()),
            served=served,
            sum_power=sum_power,
            sum_blocks=int(blocks.sum()),
            penalty=penalty,
        )
        return DdpgObservation(powers.copy(), blocks.astype(np.int64)), info

    def reset(self) -> DdpgObservation:
        """Equal power split; fresh fading gains in sampled mode."""
        if self._fading_rng is not None:
            self.links = link_states(self.scenario, self.fading, self._fading_rng)
        self.t = 0
        powers = np.full(
            self.n_users, self.scenario.budgets.total_power / self.n_users
        )
        self.obs, self.info = self.evaluate(powers)
        return self.obs

    def step(self, action: np.ndarray) -> tuple[DdpgObservation, float, bool]:
        """Apply a normalised power change in [-1, 1]^N.

        Returns:
            The next observation, the reward and the step-cap flag
        """
        if self.obs is None:
            raise InvalidArgumentError("Call reset() before step()")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.n_users,):
            raise InvalidArgumentError(
                f"Action must have length {self.n_users}, got {action.shape}"
            )
        powers = np.clip(
            self.obs.powers + np.clip(action, -1.0, 1.0) * self.cfg.delta_max,
            0.0,
            self.p_max,
        )
        self.obs, self.info = self.evaluate(powers)
        self.t += 1
        reward = self.info.n_s - self.info.penalty
        return self.obs, reward, self.t >= self.max_steps


def ddpg_env_reset(env: PowerEnv) -> DdpgObservation:
    return env.reset()


def ddpg_env_step(
    env: PowerEnv, action: np.ndarray
) -> tuple[DdpgObservation, float, bool]:
    return env.step(action)


class ActorCritic:
    """Actor, critic, their target copies and optimizers."""

    def __init__(
        self,
        actor: ParamSet,
        critic: ParamSet,
        cfg: DdpgConfig,
    ):
        n = actor.n_outputs
        if actor.n_inputs != 2 * n or critic.n_inputs != 3 * n:
            raise InvalidArgumentError(
                f"Actor {actor.layer_sizes} and critic {critic.layer_sizes} "
                "do not fit one population"
            )
        self.cfg = cfg
        self.actor = actor
        self.critic = critic
        self.actor_target = soft_update(actor, actor, 1.0)
        self.critic_target = soft_update(critic, critic, 1.0)
        self.actor_opt = Optimizer(cfg.optimizer, cfg.actor_learning_rate, actor)
        self.critic_opt = Optimizer(cfg.optimizer, cfg.critic_learning_rate, critic)

    @classmethod
    def create(cls, n_users: int, cfg: DdpgConfig, seed: int = 0) -> "ActorCritic":
        """Fresh networks: actor [2N, hidden, N] tanh head, critic [3N, hidden, 1]."""
        depth = len(cfg.hidden) + 1
        actor = mlp_init(
            [2 * n_users, *cfg.hidden, n_users],
            layer_activations(depth, "relu", "tanh"),
            derive_seed(seed, "ddpg.actor"),
        )
        critic = mlp_init(
            [3 * n_users, *cfg.hidden, 1],
            layer_activations(depth, "relu", "linear"),
            derive_seed(seed, "ddpg.critic"),
        )
        return cls(actor, critic, cfg)

    @property
    def n_users(self) -> int:
        return self.actor.n_outputs

    def act(self, observation: np.ndarray) -> np.ndarray:
        """Deterministic policy output in [-1, 1]^N."""
        return forward(self.actor, observation)

    def save(self, directory: Union[str, Path]) -> tuple[Path, Path]:
        d = Path(directory)
        return (
            save_params(self.actor, d / ACTOR_FILENAME),
            save_params(self.critic, d / CRITIC_FILENAME),
        )

    @classmethod
    def load(cls, directory: Union[str, Path], cfg: DdpgConfig) -> "ActorCritic":
        d = Path(directory)
        return cls(
            load_params(d / ACTOR_FILENAME), load_params(d / CRITIC_FILENAME), cfg
        )


def ddpg_select_action(
    ac: ActorCritic,
    observation: np.ndarray,
    noise: NoiseProcess,
    rng: np.random.Generator,
) -> np.ndarray:
    """Policy output plus exploration noise, clipped to [-1, 1]."""
    a = ac.act(observation) + noise_sample(noise, ac.n_users, rng)
    return np.clip(a, -1.0, 1.0)


def ddpg_update(
    ac: ActorCritic, buffer: ReplayBuffer, rng: np.random.Generator
) -> tuple[float, float]:
    """One critic step, one actor step and a soft update of both targets.

    Returns:
        The critic loss and the actor objective (mean Q of the policy's
        actions under the updated critic)

    Raises:
        NotReadyError: If the buffer is below ``learning_starts`` or the batch
            size
        TrainingDivergenceError: If a loss or gradient stops being finite
    """
    cfg = ac.cfg
    needed = max(cfg.batch_size, cfg.learning_starts)
    if len(buffer) < needed:
        raise NotReadyError(f"Replay buffer holds {len(buffer)}, need {needed}")
    batch = sample_minibatch(buffer, cfg.batch_size, rng)
    w = len(batch)

    next_actions = forward(ac.actor_target, batch.next_states)
    next_q = forward(
        ac.critic_target, np.hstack((batch.next_states, next_actions))
    )[:, 0]
    y = td_targets(batch.rewards, next_q, batch.terminals, cfg.gamma)
    sa = np.hstack((batch.states, batch.actions))
    diff = forward(ac.critic, sa)[:, 0] - y
    critic_loss = float(np.mean(diff**2))
    if not np.isfinite(critic_loss):
        raise TrainingDivergenceError(f"Critic loss became {critic_loss}")
    ac.critic = ac.critic_opt.step(
        ac.critic, backward(ac.critic, sa, (2.0 * diff / w)[:, None])
    )

    policy_actions = forward(ac.actor, batch.states)
    s_pi = np.hstack((batch.states, policy_actions))
    objective = float(np.mean(forward(ac.critic, s_pi)))
    if not np.isfinite(objective):
        raise TrainingDivergenceError(f"Actor objective became {objective}")
    dq_da = input_gradient(ac.critic, s_pi, np.full((w, 1), 1.0 / w))
    dq_da = dq_da[:, batch.states.shape[1] :]
    ac.actor = ac.actor_opt.step(ac.actor, backward(ac.actor, batch.states, -dq_da))

    ac.critic_target = soft_update(ac.critic_target, ac.critic, cfg.tau)
    ac.actor_target = soft_update(ac.actor_target, ac.actor, cfg.tau)
    return critic_loss, objective


@dataclass(frozen=True)
class DdpgStepRecord:
    """One row of the step log."""

    episode: int
    step: int
    n_s: int
    sum_power: float
    sum_blocks: int
    penalty: float
    reward: float


@dataclass(frozen=True)
class DdpgEpisodeSummary:
    """One row of the episode summary."""

    episode: int
    cumulative_reward: float
    discounted_return: float
    final_n_s: int
    best_feasible_n_s: int
    sum_power: float


@dataclass
class DdpgTrainingRun:
    """A trained actor-critic with its logs."""

    ac: ActorCritic
    steps: list[DdpgStepRecord] = field(default_factory=list)
    episodes: list[DdpgEpisodeSummary] = field(default_factory=list)
    updates: int = 0


def ddpg_train(
    env: PowerEnv,
    cfg: DdpgConfig,
    seed: int = 0,
    episodes: Optional[int] = None,
    log_every: int = 100,
) -> DdpgTrainingRun:
    """Train the power agent on ``env``.

    Updates start once the replay buffer holds ``learning_starts``
    transitions and happen every ``train_freq`` steps. The step cap is not
    a terminal state, so targets always bootstrap.

    Args:
        env: Power environment wrapping the scenario and block allocator
        cfg: Agent hyperparameters
        seed: Root seed for init, noise and replay streams
        episodes: Episode budget, defaults to ``cfg.episodes``
        log_every: Progress logging period in episodes

    Returns:
        The trained actor-critic and its step and episode logs
    """
    episodes = cfg.episodes if episodes is None else episodes
    ac = ActorCritic.create(env.n_users, cfg, seed)
    noise = NoiseProcess(cfg.noise_sigma, cfg.noise, cfg.ou_theta)
    noise_rng = np.random.default_rng(derive_seed(seed, "ddpg.noise"))
    replay_rng = np.random.default_rng(derive_seed(seed, "ddpg.replay"))
    buffer = ReplayBuffer(cfg.buffer_size)
    total_power = env.scenario.budgets.total_power
    logger.info(
        "DDPG: %d users, %d episodes x %d steps, delta_max %g, %s noise %g, "
        "actor %s, critic %s",
        env.n_users,
        episodes,
        env.max_steps,
        cfg.delta_max,
        cfg.noise,
        cfg.noise_sigma,
        ac.actor.layer_sizes,
        ac.critic.layer_sizes,
    )
    run = DdpgTrainingRun(ac)
    total_steps = 0
    for episode in range(1, episodes + 1):
        obs = env.reset()
        noise.reset()
        state = env.vector(obs)
        cumulative = 0.0
        rewards: list[float] = []
        assert env.info is not None
        best = env.info.n_s if env.info.sum_power <= total_power * (1 + 1e-12) else 0
        done = False
        while not done:
            action = ddpg_select_action(ac, state, noise, noise_rng)
            obs, reward, done = env.step(action)
            info = env.info
            assert info is not None
            next_state = env.vector(obs)
            buffer.push(Transition(state, action, reward, next_state, False))
            state = next_state
            cumulative += reward
            rewards.append(reward)
            total_steps += 1
            if info.sum_power <= total_power * (1 + 1e-12):
                best = max(best, info.n_s)
            run.steps.append(
                DdpgStepRecord(
                    episode=episode,
                    step=env.t,
                    n_s=info.n_s,
                    sum_power=info.sum_power,
                    sum_blocks=info.sum_blocks,
                    penalty=info.penalty,
                    reward=reward,
                )
            )
            if total_steps % cfg.train_freq == 0 and len(buffer) >= max(
                cfg.batch_size, cfg.learning_starts
            ):
                try:
                    ddpg_update(ac, buffer, replay_rng)
                except TrainingDivergenceError as e:
                    raise TrainingDivergenceError(
                        f"DDPG diverged in episode {episode}, step {env.t}: {e}"
                    ) from e
                run.updates += 1
        assert env.info is not None
        run.episodes.append(
            DdpgEpisodeSummary(
                episode=episode,
                cumulative_reward=cumulative,
                discounted_return=discounted_return(rewards, cfg.gamma),
                final_n_s=env.info.n_s,
                best_feasible_n_s=best,
                sum_power=env.info.sum_power,
            )
        )
        if episode % log_every == 0:
            recent = run.episodes[-log_every:]
            logger.info(
                "DDPG episode %d: mean reward %.2f, mean final n_s %.2f",
                episode,
                np.mean([e.cumulative_reward for e in recent]),
                np.mean([e.final_n_s for e in recent]),
            )
    return run
