"""Interface definitions for uavalloc.

This module contains the abstract interfaces shared by the agents, the
allocator and the experiment harness, promoting loose coupling and better
testability.
"""

from abc import abstractmethod
from dataclasses import dataclass
from typing import Any, Optional, Protocol

import numpy as np


class ConfigProvider(Protocol):
    """Interface for configuration providers."""

    @abstractmethod
    def get_config(self) -> dict[str, Any]:
        """Get the complete configuration."""
        pass

    @abstractmethod
    def get_value(self, key: str, default: Optional[Any] = None) -> Any:
        """Get a specific configuration value."""
        pass

    @abstractmethod
    def get_env(self, key: str) -> Optional[str]:
        """Get an environment variable value."""
        pass


@dataclass(frozen=True, eq=False)
class BlockRequests:
    """Per-user bandwidth requests produced by a block allocator.

    Attributes:
        blocks: Requested resource blocks per user
        saturated: True where the user's threshold is unreachable at its power
    """

    blocks: np.ndarray
    saturated: np.ndarray


class BlockAllocator(Protocol):
    """Interface for anything that turns a power vector into block requests."""

    @abstractmethod
    def request_blocks(self, powers: np.ndarray) -> BlockRequests:
        """Request resource blocks for every user at the given powers.

        Args:
            powers: Per-user transmit power, length N

        Returns:
            The requested block counts and saturation flags
        """
        pass


class PowerPolicy(Protocol):
    """Interface for deterministic power-change policies."""

    @abstractmethod
    def act(self, observation: np.ndarray) -> np.ndarray:
        """Map a normalized observation to an action in [-1, 1]^N."""
        pass
