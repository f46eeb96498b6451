"""Air-to-ground channel model.

LoS probability from the elevation angle, Rician/exponential fading gains,
per-link SNRs, the probability-weighted effective SNR, the Shannon rate and
the served predicate. All rate functions accept numpy arrays for the
bandwidth argument so block scans stay vectorised; scalar inputs return
plain floats.
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ..core.errors import InvalidArgumentError
from .scenario import EnvConstants, Scenario, user_geometry

ArrayLike = Union[float, np.ndarray]

EXPECTED = "expected"
SAMPLED = "sampled"


@dataclass(frozen=True)
class FadingMode:
    """How fading gains are chosen: their mean, or one seeded draw."""

    kind: str = EXPECTED
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in (EXPECTED, SAMPLED):
            raise InvalidArgumentError(f"Unknown fading mode: {self.kind}")
        if self.kind == SAMPLED and self.seed is None:
            raise InvalidArgumentError("Sampled fading needs a seed")
        if self.kind == EXPECTED and self.seed is not None:
            raise InvalidArgumentError("Expected-gain fading takes no seed")

    @classmethod
    def expected(cls) -> "FadingMode":
        return cls(EXPECTED)

    @classmethod
    def sampled(cls, seed: int) -> "FadingMode":
        return cls(SAMPLED, seed)

    @property
    def is_sampled(self) -> bool:
        return self.kind == SAMPLED


@dataclass(frozen=True)
class LinkState:
    """Geometry, LoS probability and fading gains of one user's link."""

    user: int
    d: float
    theta: float
    p_los: float
    gain_los: float
    gain_nlos: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_los <= 1.0:
            raise InvalidArgumentError(f"p_los {self.p_los} outside [0, 1]")
        if self.gain_los < 0 or self.gain_nlos < 0:
            raise InvalidArgumentError("Fading gains must be non-negative")
        if self.d <= 0:
            raise InvalidArgumentError("Link distance must be positive")


def _out(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def los_probability(theta: ArrayLike, env_b: float, env_c: float) -> ArrayLike:
    """LoS probability 1 / (1 + C exp(-B (theta_deg - C))) for theta in radians."""
    theta_deg = np.degrees(np.asarray(theta, dtype=np.float64))
    return _out(1.0 / (1.0 + env_c * np.exp(-env_b * (theta_deg - env_c))))


def sample_gain_los(
    mu: float,
    rice_k: float,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> ArrayLike:
    """Draw Rician power gains with mean ``mu`` and Rice factor ``rice_k``.

    Uses the complex-envelope form (mu / (K + 1)) * |sqrt(K) + z|^2 with z a
    circular complex normal of unit power, so the mean is exactly ``mu``.
    """
    if mu <= 0 or rice_k < 0:
        raise InvalidArgumentError("Need mu > 0 and rice_k >= 0")
    z = rng.normal(0.0, math.sqrt(0.5), size=(2,) if size is None else (2, size))
    g = mu / (rice_k + 1.0) * ((math.sqrt(rice_k) + z[0]) ** 2 + z[1] ** 2)
    return _out(g)


def sample_gain_nlos(
    mu: float, rng: np.random.Generator, size: Optional[int] = None
) -> ArrayLike:
    """Draw exponential (Rayleigh power) gains with mean ``mu``."""
    if mu <= 0:
        raise InvalidArgumentError("Need mu > 0")
    return _out(np.asarray(rng.exponential(mu, size=size)))


def _pair(
    p: ArrayLike,
    b: ArrayLike,
    d: ArrayLike,
    g: ArrayLike,
    k: ArrayLike,
    env: EnvConstants,
) -> tuple[np.ndarray, np.ndarray]:
    p_arr = np.asarray(p, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    noise = b_arr * env.noise_psd
    d_arr = np.asarray(d, dtype=np.float64)
    snr_los = p_arr * g * d_arr ** (-env.pathloss_los) / noise
    snr_nlos = p_arr * k * d_arr ** (-env.pathloss_nlos) / noise
    return snr_los, snr_nlos


def snr_components(
    p: ArrayLike, b: ArrayLike, link: LinkState, env: EnvConstants
) -> tuple[ArrayLike, ArrayLike]:
    """Return the LoS and NLoS SNRs of ``link`` at power ``p`` and bandwidth ``b``.

    Raises:
        InvalidArgumentError: If any bandwidth is not positive or any power
            is negative
    """
    if np.any(np.asarray(b) <= 0):
        raise InvalidArgumentError("SNR is undefined for zero bandwidth")
    if np.any(np.asarray(p) < 0):
        raise InvalidArgumentError("Power must be non-negative")
    snr_los, snr_nlos = _pair(p, b, link.d, link.gain_los, link.gain_nlos, env)
    return _out(snr_los), _out(snr_nlos)


def effective_snr(
    link: LinkState, p: ArrayLike, b: ArrayLike, env: EnvConstants
) -> ArrayLike:
    """LoS-probability weighted mix of the two link SNRs."""
    snr_los, snr_nlos = snr_components(p, b, link, env)
    return _out(
        link.p_los * np.asarray(snr_los) + (1.0 - link.p_los) * np.asarray(snr_nlos)
    )


def _rates(
    p: ArrayLike,
    b: ArrayLike,
    d: ArrayLike,
    p_los: ArrayLike,
    g: ArrayLike,
    k: ArrayLike,
    env: EnvConstants,
) -> np.ndarray:
    b_arr = np.asarray(b, dtype=np.float64)
    zero = b_arr <= 0
    safe_b = np.where(zero, 1.0, b_arr)
    snr_los, snr_nlos = _pair(p, safe_b, d, g, k, env)
    snr = p_los * snr_los + (1.0 - np.asarray(p_los)) * snr_nlos
    return np.where(zero, 0.0, safe_b * np.log2(1.0 + snr))


def rate_bps(
    link: LinkState, p: ArrayLike, b: ArrayLike, env: EnvConstants
) -> ArrayLike:
    """Shannon rate b * log2(1 + SNR_eff); zero bandwidth yields zero rate."""
    if np.any(np.asarray(b) < 0):
        raise InvalidArgumentError("Bandwidth must be non-negative")
    if np.any(np.asarray(p) < 0):
        raise InvalidArgumentError("Power must be non-negative")
    return _out(
        _rates(p, b, link.d, link.p_los, link.gain_los, link.gain_nlos, env)
    )


def is_served(rate: ArrayLike, threshold: ArrayLike) -> Union[bool, np.ndarray]:
    """True where the rate meets or exceeds the threshold."""
    served = np.asarray(rate) >= np.asarray(threshold)
    return bool(served) if served.ndim == 0 else served


def link_state(
    s: Scenario,
    x: float,
    y: float,
    user: int = 0,
    gain_los: Optional[float] = None,
    gain_nlos: Optional[float] = None,
) -> LinkState:
    """Build the link of a terminal at ``(x, y)`` below the scenario's UAV.

    Gains default to the mean gain (expected-gain mode).
    """
    env = s.constants
    d = math.sqrt(x * x + y * y + s.uav_height_m**2)
    theta = math.asin(s.uav_height_m / d)
    return LinkState(
        user=user,
        d=d,
        theta=theta,
        p_los=float(los_probability(theta, env.env_b, env.env_c)),
        gain_los=env.mean_gain if gain_los is None else float(gain_los),
        gain_nlos=env.mean_gain if gain_nlos is None else float(gain_nlos),
    )


def link_states(
    s: Scenario,
    fading: FadingMode = FadingMode(),
    rng: Optional[np.random.Generator] = None,
) -> tuple[LinkState, ...]:
    """Build the link of every user in the scenario.

    In sampled mode, one LoS and one NLoS gain is drawn per user from ``rng``
    (or from a generator seeded with ``fading.seed``).
    """
    env = s.constants
    n = s.n_users
    if fading.is_sampled:
        gen = rng if rng is not None else np.random.default_rng(fading.seed)
        g = np.atleast_1d(sample_gain_los(env.mean_gain, env.rice_k, gen, size=n))
        k = np.atleast_1d(sample_gain_nlos(env.mean_gain, gen, size=n))
    else:
        g = np.full(n, env.mean_gain)
        k = np.full(n, env.mean_gain)
    links = []
    for i, u in enumerate(s.users):
        _, d, theta = user_geometry(s, i)
        links.append(
            LinkState(
                user=u.id,
                d=d,
                theta=theta,
                p_los=float(los_probability(theta, env.env_b, env.env_c)),
                gain_los=float(g[i]),
                gain_nlos=float(k[i]),
            )
        )
    return tuple(links)


def user_rates(
    links: tuple[LinkState, ...],
    powers: np.ndarray,
    blocks: np.ndarray,
    block_hz: float,
    env: EnvConstants,
) -> np.ndarray:
    """Per-user rates for power and block vectors, one link per user."""
    powers = np.asarray(powers, dtype=np.float64)
    blocks = np.asarray(blocks)
    if powers.shape != (len(links),) or blocks.shape != (len(links),):
        raise InvalidArgumentError(
            f"Expected vectors of length {len(links)}, got {powers.shape} "
            f"and {blocks.shape}"
        )
    if np.any(powers < 0) or np.any(blocks < 0):
        raise InvalidArgumentError("Powers and blocks must be non-negative")
    return _rates(
        powers,
        blocks * block_hz,
        np.array([link.d for link in links]),
        np.array([link.p_los for link in links]),
        np.array([link.gain_los for link in links]),
        np.array([link.gain_nlos for link in links]),
        env,
    )


def minimal_blocks(
    link: LinkState,
    p: float,
    threshold: float,
    env: EnvConstants,
    block_hz: float,
    n_blocks: int,
) -> Optional[int]:
    """Smallest block count in 1..n_blocks that serves ``link`` at power ``p``.

    Returns:
        The block count, or None when even ``n_blocks`` blocks fall short
    """
    if p <= 0:
        return None
    counts = np.arange(1, n_blocks + 1)
    rates = np.asarray(rate_bps(link, p, counts * block_hz, env))
    hits = np.flatnonzero(rates >= threshold)
    return int(counts[hits[0]]) if hits.size else None


def expected_rates(
    s: Scenario,
    x: ArrayLike,
    y: ArrayLike,
    powers: ArrayLike,
    blocks: ArrayLike,
) -> np.ndarray:
    """Expected-gain rates of terminals at ``(x, y)``, broadcasting all inputs."""
    env = s.constants
    d = np.sqrt(np.square(x) + np.square(y) + s.uav_height_m**2)
    theta = np.arcsin(s.uav_height_m / d)
    p_los = los_probability(theta, env.env_b, env.env_c)
    blocks_hz = np.asarray(blocks, dtype=np.float64) * s.budgets.block_hz
    return _rates(powers, blocks_hz, d, p_los, env.mean_gain, env.mean_gain, env)
