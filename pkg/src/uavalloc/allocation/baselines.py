"""Comparison schemes and the brute-force oracle."""

import itertools
from typing import Optional

import numpy as np

from ..agents.ddpg_power import (
    DqnBlockAllocator,
    FixedBlockAllocator,
    PowerEnv,
    apply_bandwidth_budget,
    ddpg_train,
)
from ..agents.dqn_bandwidth import DqnAgent
from ..core.config import DdpgConfig
from ..core.errors import InvalidArgumentError, OracleSizeError, logger
from ..model.channel import FadingMode, link_states, minimal_blocks
from ..model.scenario import Scenario
from .allocator import Allocation, best_visited, evaluate_allocation

ORACLE_MAX_USERS = 6
ORACLE_MAX_GRID = 21


def equal_allocation(s: Scenario) -> Allocation:
    """Equal power and equal (floored) block split across all users."""
    n = s.n_users
    return evaluate_allocation(
        s,
        np.full(n, s.budgets.total_power / n),
        np.full(n, s.budgets.n_blocks // n, dtype=np.int64),
    )


def dqn_only(s: Scenario, dqn: DqnAgent) -> Allocation:
    """Equal power split with bandwidth sized by the trained agent."""
    n = s.n_users
    powers = np.full(n, s.budgets.total_power / n)
    req = DqnBlockAllocator(dqn, s).request_blocks(powers)
    outcome = apply_bandwidth_budget(req.blocks, s.budgets.n_blocks, req.saturated)
    return evaluate_allocation(s, powers, np.where(outcome.served, outcome.granted, 0))


def ddpg_only(
    s: Scenario,
    cfg: DdpgConfig,
    seed: int = 0,
    eval_episodes: int = 1,
    episodes: Optional[int] = None,
    fading: FadingMode = FadingMode(),
) -> Allocation:
    """Train a power agent over a fixed equal block split and report its best state.

    The block vector never changes; only powers are learned.
    """
    env = PowerEnv(
        s, FixedBlockAllocator(s), cfg, fading=fading, release_unserved=False
    )
    run = ddpg_train(env, cfg, seed=seed, episodes=episodes)
    eval_env = PowerEnv(
        s, FixedBlockAllocator(s), cfg, fading=fading, release_unserved=False
    )
    return best_visited(eval_env, run.ac, eval_episodes).best


def _check_oracle_size(
    s: Scenario, power_grid: int, max_users: int, allow_fine_grid: bool
) -> None:
    if max_users > ORACLE_MAX_USERS:
        raise OracleSizeError(
            f"max_users {max_users} exceeds the oracle limit {ORACLE_MAX_USERS}"
        )
    if s.n_users > max_users:
        raise OracleSizeError(
            f"{s.n_users} users exceed the oracle limit of {max_users}"
        )
    if power_grid < 2:
        raise InvalidArgumentError("power_grid needs at least two levels")
    if power_grid > ORACLE_MAX_GRID and not allow_fine_grid:
        raise OracleSizeError(
            f"power_grid {power_grid} exceeds {ORACLE_MAX_GRID} levels; "
            "pass allow_fine_grid to override"
        )


def brute_force(
    s: Scenario,
    power_grid: int = ORACLE_MAX_GRID,
    max_users: int = ORACLE_MAX_USERS,
    allow_fine_grid: bool = False,
) -> Allocation:
    """Exact optimum over a uniform power grid for small instances.

    Powers take values k * P_t / (power_grid - 1). Every subset of users is
    tried, largest first; for each subset an exact dynamic program over power
    units finds the level assignment with the fewest total blocks for every
    power total, where a user's blocks at a level come from the analytic
    minimal-block scan. The first subset size with an assignment that fits the
    bandwidth wins, ties going to the lowest total power.

    Args:
        s: Scenario with at most ``max_users`` users
        power_grid: Number of power levels including zero
        max_users: Size guard, at most 6
        allow_fine_grid: Permit more than 21 power levels

    Returns:
        The optimal allocation within the grid resolution

    Raises:
        OracleSizeError: If the instance exceeds the size guard
    """
    _check_oracle_size(s, power_grid, max_users, allow_fine_grid)
    n = s.n_users
    units = power_grid - 1
    step = s.budgets.total_power / units
    links = link_states(s)
    thresholds = s.thresholds
    b = s.budgets

    # cost[i][k]: minimal blocks for user i at k power units, None if unreachable
    cost = [
        [None]
        + [
            minimal_blocks(
                links[i], k * step, thresholds[i], s.constants, b.block_hz, b.n_blocks
            )
            for k in range(1, units + 1)
        ]
        for i in range(n)
    ]

    for size in range(n, 0, -1):
        best: Optional[tuple[int, tuple[int, ...], list[int]]] = None
        for subset in itertools.combinations(range(n), size):
            found = _fewest_blocks(subset, cost, units, b.n_blocks)
            if found is not None and (best is None or found[0] < best[0]):
                best = (found[0], subset, found[1])
        if best is not None:
            _, subset, levels = best
            powers = np.zeros(n)
            blocks = np.zeros(n, dtype=np.int64)
            for i, k in zip(subset, levels):
                powers[i] = k * step
                blocks[i] = cost[i][k]
            alloc = evaluate_allocation(s, powers, blocks, links)
            logger.info(
                "Oracle: n_s %d with %d power units and %d blocks",
                alloc.n_s,
                best[0],
                alloc.sum_blocks,
            )
            return alloc
    return evaluate_allocation(s, np.zeros(n), np.zeros(n, dtype=np.int64), links)


def _fewest_blocks(
    subset: tuple[int, ...],
    cost: list[list[Optional[int]]],
    units: int,
    n_blocks: int,
) -> Optional[tuple[int, list[int]]]:
    """Smallest power total whose best level assignment fits ``n_blocks``.

    Returns:
        The power units used and the level of each subset member, or None
    """
    inf = n_blocks + 1
    # dp[u]: fewest blocks serving the users processed so far with exactly u units
    dp = np.full(units + 1, inf, dtype=np.int64)
    dp[0] = 0
    choices: list[np.ndarray] = []
    for i in subset:
        nxt = np.full(units + 1, inf, dtype=np.int64)
        pick = np.zeros(units + 1, dtype=np.int64)
        for k in range(1, units + 1):
            c = cost[i][k]
            if c is None:
                continue
            cand = dp[: units + 1 - k] + c
            better = cand < nxt[k:]
            nxt[k:] = np.where(better, cand, nxt[k:])
            pick[k:] = np.where(better, k, pick[k:])
        dp = np.minimum(nxt, inf)
        choices.append(pick)
    fitting = np.flatnonzero(dp <= n_blocks)
    if fitting.size == 0:
        return None
    used = int(fitting[0])
    levels = []
    u = used
    for pick in reversed(choices):
        k = int(pick[u])
        levels.append(k)
        u -= k
    levels.reverse()
    return used, levels
