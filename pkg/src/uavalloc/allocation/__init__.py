"""Allocation evaluation, the joint solver and the comparison schemes."""

from uavalloc.allocation.allocator import (
    Allocation,
    JointSolution,
    allocation_rows,
    best_visited,
    evaluate_allocation,
    fading_draws,
    mean_served,
    solve_joint,
    zero_allocation,
)
from uavalloc.allocation.baselines import (
    brute_force,
    ddpg_only,
    dqn_only,
    equal_allocation,
)
