"""uavalloc: joint bandwidth and power allocation for a UAV-assisted downlink.

A deep Q-network sizes each ground user's bandwidth, a DDPG agent shares the
power budget across users, and an experiment harness compares the pair with
single-agent and equal-split baselines and a brute-force oracle.
"""

try:
    from ._version import __version__
except ImportError:
    __version__ = "0.0.0"

# Export core functionality
from uavalloc.core.config import (
    Config,
    ExperimentConfig,
    default_config,
    load_experiment_config,
)
from uavalloc.core.errors import (
    ArtifactError,
    ConfigError,
    ErrorSeverity,
    InvalidArgumentError,
    NotReadyError,
    OracleSizeError,
    ShapeError,
    TrainingDivergenceError,
    UavAllocError,
    display_warning,
    exit_with_error,
    handle_errors,
    log_error,
    safe_execution,
)

# Export the system model
from uavalloc.model import (
    FadingMode,
    Scenario,
    build_scenario,
    link_states,
    rate_bps,
)

# Export agents and allocation schemes
from uavalloc.agents import DqnAgent, PowerEnv, ddpg_train, dqn_train
from uavalloc.allocation import (
    Allocation,
    brute_force,
    ddpg_only,
    dqn_only,
    equal_allocation,
    evaluate_allocation,
    solve_joint,
)

# Export the experiment harness
from uavalloc.experiments import (
    run_comparison,
    run_eval,
    run_oracle,
    run_sweep,
    run_training,
)
