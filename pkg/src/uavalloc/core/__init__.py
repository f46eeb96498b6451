"""Core modules for uavalloc.

This package contains the core functionality of uavalloc, including:
- Error handling
- Configuration
- Interfaces
"""

from uavalloc.core.config import (
    Config,
    ExperimentConfig,
    build_experiment_config,
    default_config,
    load_experiment_config,
    parse_override,
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
from uavalloc.core.interfaces import (
    BlockAllocator,
    BlockRequests,
    ConfigProvider,
    PowerPolicy,
)
