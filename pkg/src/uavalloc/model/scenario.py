"""Static environment data for a single-UAV downlink.

A ``Scenario`` bundles the circular field, the ground users, the hover
height of the UAV, the physical constants and the power/bandwidth budgets.
Everything here is immutable, so one scenario can be shared read-only by
parallel experiment workers.
"""

import dataclasses
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any, Optional, Union

import numpy as np

from ..core.config import ScenarioConfig
from ..core.errors import InvalidArgumentError

Thresholds = Union[float, Sequence[float]]


@dataclass(frozen=True)
class EnvConstants:
    """Propagation and noise constants of the air-to-ground channel.

    Attributes:
        pathloss_los: Path-loss exponent of line-of-sight links
        pathloss_nlos: Path-loss exponent of non-line-of-sight links
        env_b: Environment constant B of the LoS probability curve
        env_c: Environment constant C of the LoS probability curve
        noise_psd: Noise power spectral density in W/Hz
        mean_gain: Mean fading power gain shared by both link types
        rice_k: Rice factor of the LoS fading
    """

    pathloss_los: float = 2.5
    pathloss_nlos: float = 3.5
    env_b: float = 0.136
    env_c: float = 11.95
    noise_psd: float = 1.0e-16
    mean_gain: float = 0.5
    rice_k: float = 10.0

    def __post_init__(self) -> None:
        if not self.pathloss_nlos > self.pathloss_los > 0:
            raise InvalidArgumentError(
                "Path-loss exponents must satisfy pathloss_nlos > pathloss_los > 0"
            )
        if self.noise_psd <= 0 or self.mean_gain <= 0:
            raise InvalidArgumentError("noise_psd and mean_gain must be positive")
        if self.rice_k < 0:
            raise InvalidArgumentError("rice_k must be non-negative")
        if self.env_b <= 0 or self.env_c <= 0:
            raise InvalidArgumentError("env_b and env_c must be positive")


@dataclass(frozen=True)
class Budgets:
    """Total power and bandwidth available to the UAV."""

    total_power: float
    total_bandwidth_hz: float
    block_hz: float
    n_blocks: int

    def __post_init__(self) -> None:
        if self.total_power <= 0:
            raise InvalidArgumentError("total_power must be positive")
        if self.block_hz <= 0:
            raise InvalidArgumentError("block_hz must be positive")
        if isinstance(self.n_blocks, bool) or not isinstance(self.n_blocks, int):
            raise InvalidArgumentError("n_blocks must be an integer")
        if self.n_blocks < 1:
            raise InvalidArgumentError("n_blocks must be at least 1")
        if not math.isclose(
            self.n_blocks * self.block_hz, self.total_bandwidth_hz, rel_tol=1e-12
        ):
            raise InvalidArgumentError(
                f"{self.total_bandwidth_hz} Hz is not {self.n_blocks} blocks "
                f"of {self.block_hz} Hz"
            )

    @classmethod
    def from_blocks(
        cls, total_power: float, block_hz: float, n_blocks: int
    ) -> "Budgets":
        """Build budgets from a block count."""
        return cls(total_power, n_blocks * block_hz, block_hz, n_blocks)


@dataclass(frozen=True)
class GroundUser:
    """A ground terminal at (x, y, 0) with its own rate requirement."""

    id: int
    x: float
    y: float
    rate_threshold_bps: float

    def __post_init__(self) -> None:
        if self.rate_threshold_bps <= 0:
            raise InvalidArgumentError(
                f"User {self.id}: rate_threshold_bps must be positive"
            )


@dataclass(frozen=True)
class Scenario:
    """Field, user population, UAV placement, constants and budgets."""

    radius_m: float
    uav_height_m: float
    users: tuple[GroundUser, ...]
    constants: EnvConstants
    budgets: Budgets

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise InvalidArgumentError("radius_m must be positive")
        if self.uav_height_m <= 0:
            raise InvalidArgumentError("uav_height_m must be positive")
        if not self.users:
            raise InvalidArgumentError("A scenario needs at least one user")
        ids = [u.id for u in self.users]
        if ids != list(range(1, len(ids) + 1)):
            raise InvalidArgumentError(f"User ids must be 1..N in order, got {ids}")
        limit = self.radius_m * (1 + 1e-12)
        for u in self.users:
            if math.hypot(u.x, u.y) > limit:
                raise InvalidArgumentError(
                    f"User {u.id} at ({u.x}, {u.y}) lies outside the field"
                )

    @property
    def n_users(self) -> int:
        return len(self.users)

    @property
    def thresholds(self) -> np.ndarray:
        """Per-user rate thresholds in bits/s."""
        return np.array([u.rate_threshold_bps for u in self.users], dtype=np.float64)

    @property
    def positions(self) -> np.ndarray:
        """User positions as an ``(N, 2)`` array."""
        return np.array([(u.x, u.y) for u in self.users], dtype=np.float64)

    def with_overrides(
        self,
        uav_height_m: Optional[float] = None,
        rate_threshold_bps: Optional[Thresholds] = None,
        total_power: Optional[float] = None,
        n_blocks: Optional[int] = None,
        constants: Optional[dict[str, Any]] = None,
    ) -> "Scenario":
        """Return a copy with selected values replaced, keeping user positions.

        Args:
            uav_height_m: New hover height
            rate_threshold_bps: New common threshold or per-user list
            total_power: New power budget
            n_blocks: New number of resource blocks (block size unchanged)
            constants: Field updates for ``EnvConstants``

        Returns:
            The new scenario
        """
        users = self.users
        if rate_threshold_bps is not None:
            per_user = _expand_thresholds(rate_threshold_bps, self.n_users)
            users = tuple(
                dataclasses.replace(u, rate_threshold_bps=t)
                for u, t in zip(users, per_user)
            )
        budgets = Budgets.from_blocks(
            total_power if total_power is not None else self.budgets.total_power,
            self.budgets.block_hz,
            n_blocks if n_blocks is not None else self.budgets.n_blocks,
        )
        return Scenario(
            radius_m=self.radius_m,
            uav_height_m=(
                uav_height_m if uav_height_m is not None else self.uav_height_m
            ),
            users=users,
            constants=dataclasses.replace(self.constants, **(constants or {})),
            budgets=budgets,
        )


def _expand_thresholds(thresholds: Thresholds, n: int) -> list[float]:
    if isinstance(thresholds, (int, float)):
        return [float(thresholds)] * n
    values = [float(t) for t in thresholds]
    if len(values) != n:
        raise InvalidArgumentError(
            f"Got {len(values)} rate thresholds for {n} users"
        )
    return values


def sample_disk_points(
    n: int, radius_m: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` points uniformly by area over a disk centred at the origin.

    Uses the inverse CDF of the radius (r = R * sqrt(u)), so a seed always
    consumes exactly ``2 * n`` uniforms.

    Args:
        n: Number of points
        radius_m: Disk radius
        rng: Random generator owned by the caller

    Returns:
        The x and y coordinate arrays
    """
    if n < 1:
        raise InvalidArgumentError("n must be at least 1")
    if radius_m <= 0:
        raise InvalidArgumentError("radius_m must be positive")
    u = rng.random(n)
    v = rng.random(n)
    r = radius_m * np.sqrt(u)
    angle = 2.0 * np.pi * v
    return r * np.cos(angle), r * np.sin(angle)


def generate_users(
    n: int, radius_m: float, thresholds: Thresholds, rng_seed: int
) -> tuple[GroundUser, ...]:
    """Generate a reproducible, area-uniform user layout.

    Args:
        n: Number of users
        radius_m: Field radius
        thresholds: One common rate threshold or one per user
        rng_seed: Layout seed

    Returns:
        Users with ids 1..n

    Raises:
        InvalidArgumentError: If ``n`` < 1, the radius is not positive or the
            threshold list has the wrong length
    """
    x, y = sample_disk_points(n, radius_m, np.random.default_rng(rng_seed))
    per_user = _expand_thresholds(thresholds, n)
    return tuple(
        GroundUser(id=i + 1, x=float(x[i]), y=float(y[i]), rate_threshold_bps=t)
        for i, t in enumerate(per_user)
    )


def user_geometry(s: Scenario, i: int) -> tuple[float, float, float]:
    """Return ground distance, slant distance and elevation angle of user ``i``.

    ``i`` is the zero-based position in ``s.users``.
    """
    if not 0 <= i < s.n_users:
        raise InvalidArgumentError(f"User index {i} out of range for {s.n_users}")
    u = s.users[i]
    r = math.hypot(u.x, u.y)
    d = math.hypot(r, s.uav_height_m)
    return r, d, math.asin(s.uav_height_m / d)


def geometry_arrays(s: Scenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``user_geometry`` over all users."""
    pos = s.positions
    r = np.hypot(pos[:, 0], pos[:, 1])
    d = np.hypot(r, s.uav_height_m)
    return r, d, np.arcsin(s.uav_height_m / d)


def build_scenario(cfg: ScenarioConfig, rng_seed: int = 0) -> Scenario:
    """Build a scenario from its validated configuration.

    The layout seed is ``cfg.layout_seed`` when set, ``rng_seed`` otherwise.
    When ``cfg.rate_threshold_range_bps`` is set, per-user thresholds are
    drawn uniformly from that range with a stream derived from the layout
    seed; otherwise ``cfg.rate_threshold_bps`` is used as given.

    Args:
        cfg: Scenario section of an experiment configuration
        rng_seed: Fallback layout seed

    Returns:
        The immutable scenario
    """
    seed = cfg.layout_seed if cfg.layout_seed is not None else rng_seed
    thresholds: Thresholds = cfg.rate_threshold_bps
    if cfg.rate_threshold_range_bps is not None:
        lo, hi = cfg.rate_threshold_range_bps
        thresholds = list(
            np.random.default_rng([seed, 1]).uniform(lo, hi, cfg.n_users)
        )
    c = cfg.constants
    return Scenario(
        radius_m=cfg.radius_m,
        uav_height_m=cfg.uav_height_m,
        users=generate_users(cfg.n_users, cfg.radius_m, thresholds, seed),
        constants=EnvConstants(
            pathloss_los=c.pathloss_los,
            pathloss_nlos=c.pathloss_nlos,
            env_b=c.env_b,
            env_c=c.env_c,
            noise_psd=c.noise_psd,
            mean_gain=c.mean_gain,
            rice_k=c.rice_k,
        ),
        budgets=Budgets.from_blocks(cfg.total_power, cfg.block_hz, cfg.n_blocks),
    )
