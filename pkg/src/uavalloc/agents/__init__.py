"""Learning agents: the per-user bandwidth DQN and the joint power DDPG."""

from uavalloc.agents.ddpg_power import (
    ActorCritic,
    DdpgEpisodeSummary,
    DdpgObservation,
    DdpgStepRecord,
    DdpgTrainingRun,
    DqnBlockAllocator,
    FixedBlockAllocator,
    PowerEnv,
    apply_bandwidth_budget,
    ddpg_env_reset,
    ddpg_env_step,
    ddpg_select_action,
    ddpg_train,
    ddpg_update,
)
from uavalloc.agents.dqn_bandwidth import (
    BlockDecision,
    DqnAction,
    DqnAgent,
    DqnEpisodeResult,
    DqnObservation,
    DqnTrainingRun,
    dqn_allocate_blocks,
    dqn_allocate_blocks_batch,
    dqn_env_reset,
    dqn_env_step,
    dqn_reward,
    dqn_select_action,
    dqn_train,
    dqn_update,
)
