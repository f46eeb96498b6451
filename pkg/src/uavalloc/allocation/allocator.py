"""Allocation evaluation and the joint inference-time solver.

``evaluate_allocation`` checks a power/block assignment against the rate,
power, bandwidth and sign constraints; ``solve_joint`` rolls the trained
power policy out noise-free on top of the trained bandwidth agent and keeps
the best feasible state it visits. In sampled fading mode visited states are
ranked by their mean served count over the rollouts' fading draws.
"""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from ..agents.ddpg_power import DqnBlockAllocator, PowerEnv
from ..agents.dqn_bandwidth import DqnAgent
from ..core.config import DdpgConfig
from ..core.errors import InvalidArgumentError, logger
from ..core.interfaces import PowerPolicy
from ..model.channel import FadingMode, LinkState, link_states, user_rates
from ..model.scenario import Scenario

POWER_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class Allocation:
    """Per-user powers and blocks with their evaluation.

    Attributes:
        powers: Transmit power per user
        blocks: Resource blocks per user
        served: Whether each user's rate meets its threshold
        rates: Achieved rate per user in bits/s
        n_s: Number of served users
        feasible: True when no constraint is violated
        violations: One message per violated constraint, prefixed by its tag
    """

    powers: np.ndarray
    blocks: np.ndarray
    served: np.ndarray
    rates: np.ndarray
    n_s: int
    feasible: bool
    violations: tuple[str, ...] = ()

    @property
    def sum_power(self) -> float:
        return float(self.powers.sum())

    @property
    def sum_blocks(self) -> int:
        return int(self.blocks.sum())


def evaluate_allocation(
    s: Scenario,
    powers: np.ndarray,
    blocks: np.ndarray,
    links: Optional[tuple[LinkState, ...]] = None,
) -> Allocation:
    """Evaluate an assignment against one set of links.

    Args:
        s: Scenario
        powers: Power per user
        blocks: Blocks per user
        links: Link realizations, defaults to the expected-gain links of ``s``

    Returns:
        The evaluated allocation with its violation report

    Raises:
        InvalidArgumentError: If a vector does not have one entry per user
    """
    powers = np.asarray(powers, dtype=np.float64)
    blocks_in = np.asarray(blocks)
    n = s.n_users
    if powers.shape != (n,) or blocks_in.shape != (n,):
        raise InvalidArgumentError(
            f"Expected {n} powers and blocks, got {powers.shape} and "
            f"{blocks_in.shape}"
        )
    violations = []
    budgets = s.budgets
    if not np.all(np.isfinite(powers)) or np.any(powers < 0):
        violations.append("C5: powers must be finite and non-negative")
    integral = np.all(np.isfinite(blocks_in)) and np.all(
        np.equal(np.mod(blocks_in, 1), 0)
    )
    if not integral or np.any(blocks_in < 0):
        violations.append("C6: blocks must be non-negative integers")
    total = float(np.sum(powers))
    if total > budgets.total_power * (1 + POWER_RTOL):
        violations.append(
            f"C2: total power {total!r} exceeds budget {budgets.total_power!r}"
        )
    total_blocks = int(np.sum(np.floor(np.nan_to_num(blocks_in))))
    if total_blocks > budgets.n_blocks:
        violations.append(
            f"C3: {total_blocks} blocks exceed budget {budgets.n_blocks}"
        )

    safe_powers = np.clip(np.nan_to_num(powers), 0.0, None)
    safe_blocks = np.clip(np.floor(np.nan_to_num(blocks_in)), 0, None).astype(
        np.int64
    )
    rates = user_rates(
        links if links is not None else link_states(s),
        safe_powers,
        safe_blocks,
        budgets.block_hz,
        s.constants,
    )
    served = (safe_blocks > 0) & (rates >= s.thresholds)
    return Allocation(
        powers=powers,
        blocks=np.array(blocks_in),
        served=served,
        rates=rates,
        n_s=int(served.sum()),
        feasible=not violations,
        violations=tuple(violations),
    )


def zero_allocation(s: Scenario) -> Allocation:
    """The all-zero assignment, always feasible."""
    return evaluate_allocation(
        s, np.zeros(s.n_users), np.zeros(s.n_users, dtype=np.int64)
    )


def _better(
    score: float, a: Allocation, incumbent: Optional[tuple[float, Allocation]]
) -> bool:
    if incumbent is None:
        return True
    best_score, b = incumbent
    if score != best_score:
        return score > best_score
    return a.sum_power < b.sum_power


def fading_draws(
    s: Scenario, fading: FadingMode, draws: int
) -> list[tuple[LinkState, ...]]:
    """Link realizations that visited states are scored against.

    Expected-gain mode has a single realization. Sampled mode draws ``draws``
    link sets from a generator seeded with ``fading.seed``, the same sequence
    a freshly built ``PowerEnv`` sees on its successive resets.
    """
    if not fading.is_sampled:
        return [link_states(s)]
    if draws < 1:
        raise InvalidArgumentError("draws must be at least 1")
    rng = np.random.default_rng(fading.seed)
    return [link_states(s, fading, rng) for _ in range(draws)]


def mean_served(
    s: Scenario,
    powers: np.ndarray,
    blocks: np.ndarray,
    draws: list[tuple[LinkState, ...]],
) -> float:
    """Served count of one assignment, averaged over link realizations."""
    if not draws:
        raise InvalidArgumentError("At least one link realization is required")
    return float(
        np.mean([evaluate_allocation(s, powers, blocks, links).n_s for links in draws])
    )


@dataclass(frozen=True)
class JointSolution:
    """Best feasible visited allocation and the last rollout's final state.

    ``best`` and ``final`` carry expected-gain served flags; the mean served
    counts are taken over the fading draws and equal ``n_s`` in expected mode.
    """

    best: Allocation
    final: Allocation
    visited: int
    best_mean_n_s: float
    final_mean_n_s: float


def best_visited(env: PowerEnv, policy: PowerPolicy, episodes: int) -> JointSolution:
    """Roll ``policy`` out without noise and keep the best feasible state.

    Every visited state, including each episode's initial one, is evaluated.
    States are ranked by their mean served count over the fading draws of the
    ``episodes`` rollouts; ties go to the lower total power.
    """
    if episodes < 1:
        raise InvalidArgumentError("episodes must be at least 1")
    s = env.scenario
    draws = fading_draws(s, env.fading, episodes)
    expected = link_states(s) if env.fading.is_sampled else draws[0]
    best: Optional[tuple[float, Allocation]] = None
    final: Optional[tuple[float, Allocation]] = None
    visited = 0
    for _ in range(episodes):
        obs = env.reset()
        done = False
        while True:
            current = evaluate_allocation(s, obs.powers, obs.blocks, expected)
            score = (
                mean_served(s, obs.powers, obs.blocks, draws)
                if env.fading.is_sampled
                else float(current.n_s)
            )
            visited += 1
            if current.feasible and _better(score, current, best):
                best = (score, current)
            if done:
                break
            obs, _, done = env.step(policy.act(env.vector(obs)))
        final = (score, current)
    assert final is not None
    if best is None:
        logger.warning(
            "No feasible state in %d visited states; reporting the zero allocation",
            visited,
        )
        best = (0.0, zero_allocation(s))
    return JointSolution(
        best=best[1],
        final=final[1],
        visited=visited,
        best_mean_n_s=best[0],
        final_mean_n_s=final[0],
    )


def solve_joint(
    s: Scenario,
    dqn: DqnAgent,
    ddpg: PowerPolicy,
    cfg: DdpgConfig,
    eval_episodes: int,
    fading: FadingMode = FadingMode(),
) -> JointSolution:
    """Joint allocation from the trained bandwidth and power agents.

    Args:
        s: Scenario
        dqn: Trained bandwidth agent
        ddpg: Trained power policy
        cfg: Power agent settings (step size, cap, penalty)
        eval_episodes: Number of greedy rollouts, one fading draw each
        fading: Fading mode of the rollout environment

    Returns:
        The best feasible and the final allocation
    """
    env = PowerEnv(s, DqnBlockAllocator(dqn, s), cfg, fading)
    solution = best_visited(env, ddpg, eval_episodes)
    logger.info(
        "Joint solution: best n_s %d (mean %.2f, sum power %.4f), final n_s %d "
        "over %d states",
        solution.best.n_s,
        solution.best_mean_n_s,
        solution.best.sum_power,
        solution.final.n_s,
        solution.visited,
    )
    return solution


def allocation_rows(s: Scenario, alloc: Allocation) -> list[dict[str, Any]]:
    """One row per user: id, position, power, blocks, rate and served flag."""
    return [
        {
            "user": u.id,
            "x": u.x,
            "y": u.y,
            "power": float(alloc.powers[i]),
            "blocks": int(alloc.blocks[i]),
            "rate_bps": float(alloc.rates[i]),
            "served": bool(alloc.served[i]),
        }
        for i, u in enumerate(s.users)
    ]
