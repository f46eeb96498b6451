"""Learning building blocks: the dense-network engine and RL plumbing."""

from uavalloc.learning.neural import (
    AdamState,
    Gradients,
    Optimizer,
    ParamSet,
    adam_step,
    backward,
    forward,
    input_gradient,
    load_params,
    mlp_init,
    save_params,
    sgd_step,
    soft_update,
)
from uavalloc.learning.rl_core import (
    Batch,
    EpsilonSchedule,
    NoiseProcess,
    ReplayBuffer,
    Transition,
    derive_seed,
    discounted_return,
    epsilon_at,
    mean_convergence_episode,
    noise_sample,
    push,
    sample_minibatch,
    td_targets,
    variance_convergence_episode,
)
