"""Experiment runner: training, parameter sweeps, scheme comparison and oracle runs.

Each entry point takes a validated ``ExperimentConfig``, derives every random
stream from the run seed and writes a self-describing artifact directory
(CSVs, models, config snapshot and manifest).
"""

import statistics
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, TypeVar, Union

from ..agents.ddpg_power import (
    ActorCritic,
    DdpgTrainingRun,
    DqnBlockAllocator,
    PowerEnv,
    ddpg_train,
)
from ..agents.dqn_bandwidth import MODEL_FILENAME, DqnAgent, DqnTrainingRun, dqn_train
from ..allocation.allocator import Allocation, JointSolution, solve_joint
from ..allocation.baselines import brute_force, ddpg_only, dqn_only, equal_allocation
from ..core.config import SWEEP_AXES, ExperimentConfig, build_experiment_config
from ..core.errors import ArtifactError, ConfigError, logger
from ..learning.rl_core import (
    derive_seed,
    mean_convergence_episode,
    variance_convergence_episode,
)
from ..model.channel import FadingMode
from ..model.scenario import Scenario, build_scenario
from .artifacts import (
    COMPARISON_SCHEMA,
    RATIOS_SCHEMA,
    SWEEP_SCHEMA,
    build_manifest,
    read_config_snapshot,
    read_manifest,
    write_allocation_csv,
    write_config_snapshot,
    write_csv,
    write_ddpg_logs,
    write_dqn_log,
    write_manifest,
)

METHODS = ("joint", "dqn_only", "ddpg_only", "equal")

# Full-scale gains of the joint scheme over each baseline, reported for reference
PUBLISHED_RATIOS = {"equal": 1.41, "ddpg_only": 1.29, "dqn_only": 1.19}

T = TypeVar("T")
R = TypeVar("R")


@dataclass
class TrainedModels:
    """Both trained agents for one scenario and seed."""

    scenario: Scenario
    dqn: DqnTrainingRun
    ddpg: DdpgTrainingRun
    fading: FadingMode


@dataclass(frozen=True)
class SweepReport:
    """Sweep rows, ordered by axis value then seed, and the CSV path."""

    axis: str
    rows: list[dict[str, Any]]
    path: Path


@dataclass(frozen=True)
class ComparisonReport:
    """Per-seed rows for every scheme, median ratios and the output directory."""

    rows: list[dict[str, Any]]
    ratios: list[dict[str, Any]]
    directory: Path


def fading_mode(cfg: ExperimentConfig, seed: int) -> FadingMode:
    if cfg.channel.fading == "sampled":
        return FadingMode.sampled(derive_seed(seed, "fading"))
    return FadingMode.expected()


def train_models(cfg: ExperimentConfig, seed: int) -> TrainedModels:
    """Train the bandwidth agent, then the power agent on top of it.

    Args:
        cfg: Experiment configuration
        seed: Root seed; the user layout and all agent streams derive from it

    Returns:
        The scenario and both training runs
    """
    s = build_scenario(cfg.scenario, seed)
    log_every = cfg.experiment.log_every
    logger.info(
        "Training seed %d: %d users, %d blocks, P_t %g W, height %g m",
        seed,
        s.n_users,
        s.budgets.n_blocks,
        s.budgets.total_power,
        s.uav_height_m,
    )
    dqn_run = dqn_train(s, cfg.dqn, seed=seed, log_every=log_every)
    fading = fading_mode(cfg, seed)
    env = PowerEnv(s, DqnBlockAllocator(dqn_run.agent, s), cfg.ddpg, fading)
    ddpg_run = ddpg_train(env, cfg.ddpg, seed=seed, log_every=log_every)
    return TrainedModels(scenario=s, dqn=dqn_run, ddpg=ddpg_run, fading=fading)


def joint_solution(cfg: ExperimentConfig, models: TrainedModels) -> JointSolution:
    return solve_joint(
        models.scenario,
        models.dqn.agent,
        models.ddpg.ac,
        cfg.ddpg,
        cfg.experiment.eval_episodes,
        models.fading,
    )


def convergence_episodes(
    cfg: ExperimentConfig, models: TrainedModels
) -> dict[str, Optional[int]]:
    """Episodes after which the DQN step count and the DDPG reward settle.

    The DQN criterion is a stable trailing mean of steps to terminal; the DDPG
    criterion is a trailing standard deviation of the per-step reward at or
    below ``experiment.convergence_max_std``.
    """
    exp = cfg.experiment
    steps = cfg.ddpg.max_steps
    return {
        "dqn": mean_convergence_episode(
            [r.steps_to_terminal for r in models.dqn.log], exp.convergence_window
        ),
        "ddpg": variance_convergence_episode(
            [e.cumulative_reward / steps for e in models.ddpg.episodes],
            exp.convergence_window,
            exp.convergence_max_std,
        ),
    }


def _out_dir(cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]]) -> Path:
    return Path(out_dir if out_dir is not None else cfg.experiment.out_dir)


def _map(fn: Callable[[T], R], tasks: Sequence[T], workers: int) -> list[R]:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def run_training(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    out_dir: Optional[Union[str, Path]] = None,
) -> Path:
    """Train both agents for one seed and persist everything needed to replay it.

    The artifact directory holds the three model files, the DQN log, the DDPG
    step and episode logs, the joint allocation, the config snapshot and the
    manifest.

    Args:
        cfg: Validated experiment configuration
        seed: Root seed, defaults to the first configured seed
        out_dir: Parent directory, defaults to ``experiment.out_dir``

    Returns:
        The artifact directory
    """
    seed = cfg.experiment.seeds[0] if seed is None else seed
    directory = _out_dir(cfg, out_dir) / f"train-seed{seed}"
    models = train_models(cfg, seed)
    solution = joint_solution(cfg, models)

    models.dqn.agent.save(directory)
    models.ddpg.ac.save(directory)
    write_dqn_log(directory / "dqn_log.csv", models.dqn)
    write_ddpg_logs(directory, models.ddpg)
    write_allocation_csv(
        directory / "allocation.csv", models.scenario, solution.best, "joint"
    )
    write_config_snapshot(directory, cfg)
    write_manifest(
        directory,
        build_manifest(
            cfg,
            seed,
            "train",
            convergence_episode=convergence_episodes(cfg, models),
            result={
                **_summary(solution.best, solution.final),
                "best_mean_n_s": solution.best_mean_n_s,
            },
        ),
    )
    logger.info("Training artifacts written to %s", directory)
    return directory


def _summary(best: Allocation, final: Optional[Allocation] = None) -> dict[str, Any]:
    summary: dict[str, Any] = {
        "best_n_s": best.n_s,
        "best_sum_power": best.sum_power,
        "best_sum_blocks": best.sum_blocks,
    }
    if final is not None:
        summary["final_n_s"] = final.n_s
    return summary


def sweep_overrides(
    axis: str,
    value: float,
    mean_gain: Optional[float] = None,
    threshold: Optional[float] = None,
) -> dict:
    """Dotted-key overrides placing a configuration at one sweep point.

    ``total_bandwidth`` values are in Hz and must be whole multiples of the
    block size; ``fading`` values are Rice factors evaluated in sampled mode.
    ``mean_gain`` crosses the fading axis and ``threshold`` the total power
    axis.

    Raises:
        ConfigError: For an unknown axis or a cross the axis does not take
    """
    if mean_gain is not None and axis != "fading":
        raise ConfigError(f"experiment.fading_mean_gains: no cross with {axis!r}")
    if threshold is not None and axis != "total_power":
        raise ConfigError(f"experiment.threshold_values: no cross with {axis!r}")
    if axis == "threshold":
        return _threshold_overrides(value)
    if axis == "total_bandwidth":
        return {"scenario.total_bandwidth_hz": value}
    if axis == "height":
        return {"scenario.uav_height_m": value}
    if axis == "total_power":
        overrides: dict[str, Any] = {"scenario.total_power": value}
        if threshold is not None:
            overrides.update(_threshold_overrides(threshold))
        return overrides
    if axis == "fading":
        overrides = {
            "channel.fading": "sampled",
            "scenario.constants.rice_k": value,
        }
        if mean_gain is not None:
            overrides["scenario.constants.mean_gain"] = mean_gain
        return overrides
    raise ConfigError(f"experiment.sweep_axis: one of {SWEEP_AXES}, got {axis!r}")


def _threshold_overrides(threshold: float) -> dict[str, Any]:
    return {
        "scenario.rate_threshold_bps": threshold,
        "scenario.rate_threshold_range_bps": None,
    }


SweepTask = tuple[ExperimentConfig, str, float, Optional[float], Optional[float], int]


def _sweep_point(task: SweepTask) -> dict[str, Any]:
    cfg, axis, value, mean_gain, threshold, seed = task
    point = cfg.replace(sweep_overrides(axis, value, mean_gain, threshold))
    models = train_models(point, seed)
    solution = joint_solution(point, models)
    converged = convergence_episodes(point, models)
    return {
        "axis": axis,
        "value": value,
        "mean_gain": mean_gain,
        "threshold_bps": threshold,
        "seed": seed,
        "final_n_s": solution.final.n_s,
        "best_n_s": solution.best.n_s,
        "best_mean_n_s": solution.best_mean_n_s,
        "best_sum_power": solution.best.sum_power,
        "convergence_episode": converged["ddpg"],
    }


def run_sweep(
    cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None
) -> SweepReport:
    """Train and solve at every (sweep value, cross value, seed) point.

    The fading axis is crossed with ``experiment.fading_mean_gains`` and the
    total power axis with ``experiment.threshold_values`` when those are set.
    Points run in a process pool when ``experiment.workers`` is above one;
    rows are sorted by value, cross value and seed before the CSV is written.
    ``best_mean_n_s`` averages the served count over the evaluation fading
    draws and is the column that reflects the Rice factor on the fading axis.

    Raises:
        ConfigError: If no sweep axis or no sweep values are configured
    """
    exp = cfg.experiment
    if exp.sweep_axis not in SWEEP_AXES:
        raise ConfigError(f"experiment.sweep_axis: choose one of {SWEEP_AXES}")
    if not exp.sweep_values:
        raise ConfigError("experiment.sweep_values: at least one value is required")
    gains: Sequence[Optional[float]] = (None,)
    thresholds: Sequence[Optional[float]] = (None,)
    if exp.sweep_axis == "fading" and exp.fading_mean_gains:
        gains = exp.fading_mean_gains
    if exp.sweep_axis == "total_power" and exp.threshold_values:
        thresholds = exp.threshold_values
    tasks: list[SweepTask] = [
        (cfg, exp.sweep_axis, float(v), g, t, seed)
        for v in exp.sweep_values
        for g in gains
        for t in thresholds
        for seed in exp.seeds
    ]
    logger.info("Sweep over %s: %d points", exp.sweep_axis, len(tasks))
    rows = _map(_sweep_point, tasks, exp.workers)
    rows.sort(
        key=lambda r: (
            r["value"],
            r["mean_gain"] or 0.0,
            r["threshold_bps"] or 0.0,
            r["seed"],
        )
    )

    directory = _out_dir(cfg, out_dir) / f"sweep-{exp.sweep_axis}"
    path = write_csv(directory / f"sweep_{exp.sweep_axis}.csv", SWEEP_SCHEMA, rows)
    write_config_snapshot(directory, cfg)
    write_manifest(directory, build_manifest(cfg, None, "sweep"))
    return SweepReport(axis=exp.sweep_axis, rows=rows, path=path)


def median_by(
    rows: Iterable[dict[str, Any]], key: str, value: str = "best_n_s"
) -> dict[Any, float]:
    """Median of ``value`` per distinct ``key``, in first-seen key order."""
    groups: dict[Any, list[float]] = {}
    for row in rows:
        groups.setdefault(row[key], []).append(row[value])
    return {k: float(statistics.median(v)) for k, v in groups.items()}


def compare_seed(task: tuple[ExperimentConfig, int]) -> list[dict[str, Any]]:
    """All four schemes on one seed's scenario."""
    cfg, seed = task
    models = train_models(cfg, seed)
    s = models.scenario
    allocations = {
        "joint": joint_solution(cfg, models).best,
        "dqn_only": dqn_only(s, models.dqn.agent),
        "ddpg_only": ddpg_only(
            s,
            cfg.ddpg,
            seed=seed,
            eval_episodes=cfg.experiment.eval_episodes,
            fading=models.fading,
        ),
        "equal": equal_allocation(s),
    }
    rows = []
    for method in METHODS:
        alloc = allocations[method]
        if not alloc.feasible:
            logger.error(
                "%s allocation for seed %d violates %s",
                method,
                seed,
                "; ".join(alloc.violations),
            )
        rows.append(
            {
                "method": method,
                "seed": seed,
                "n_s": alloc.n_s,
                "sum_power": alloc.sum_power,
                "sum_blocks": alloc.sum_blocks,
                "feasible": alloc.feasible,
            }
        )
    return rows


def comparison_ratios(rows: Sequence[dict[str, Any]]) -> list[dict[str, Any]]:
    """Median joint n_s over each baseline's median, None when undefined."""
    medians = median_by(rows, "method", "n_s")
    joint = medians.get("joint", 0.0)
    ratios = []
    for baseline, published in PUBLISHED_RATIOS.items():
        base = medians.get(baseline, 0.0)
        ratios.append(
            {
                "baseline": baseline,
                "joint_median_n_s": joint,
                "baseline_median_n_s": base,
                "ratio": joint / base if base > 0 else None,
                "published_ratio": published,
            }
        )
    return ratios


def run_comparison(
    cfg: ExperimentConfig, out_dir: Optional[Union[str, Path]] = None
) -> ComparisonReport:
    """Compare the joint scheme with both single-agent schemes and equal split.

    Writes ``comparison.csv`` (one row per scheme and seed) and ``ratios.csv``
    (median joint gain over each baseline next to the published full-scale
    gain). The measured ratios are reported, never asserted.
    """
    exp = cfg.experiment
    tasks = [(cfg, seed) for seed in exp.seeds]
    rows = [row for rs in _map(compare_seed, tasks, exp.workers) for row in rs]
    rows.sort(key=lambda r: (METHODS.index(r["method"]), r["seed"]))
    ratios = comparison_ratios(rows)

    directory = _out_dir(cfg, out_dir) / "compare"
    write_csv(directory / "comparison.csv", COMPARISON_SCHEMA, rows)
    write_csv(directory / "ratios.csv", RATIOS_SCHEMA, ratios)
    write_config_snapshot(directory, cfg)
    write_manifest(directory, build_manifest(cfg, None, "compare", ratios=ratios))
    return ComparisonReport(rows=rows, ratios=ratios, directory=directory)


def run_oracle(
    cfg: ExperimentConfig,
    seed: Optional[int] = None,
    out_dir: Optional[Union[str, Path]] = None,
    power_grid: int = 21,
    allow_fine_grid: bool = False,
) -> tuple[Allocation, Path]:
    """Brute-force optimum for the configured scenario (small N only).

    Returns:
        The oracle allocation and the artifact directory

    Raises:
        OracleSizeError: If the scenario exceeds the oracle's size guard
    """
    seed = cfg.experiment.seeds[0] if seed is None else seed
    s = build_scenario(cfg.scenario, seed)
    alloc = brute_force(s, power_grid=power_grid, allow_fine_grid=allow_fine_grid)
    directory = _out_dir(cfg, out_dir) / f"oracle-seed{seed}"
    write_allocation_csv(directory / "allocation.csv", s, alloc, "oracle")
    write_config_snapshot(directory, cfg)
    write_manifest(
        directory,
        build_manifest(
            cfg, seed, "oracle", power_grid=power_grid, result=_summary(alloc)
        ),
    )
    return alloc, directory


def run_eval(directory: Union[str, Path]) -> tuple[Allocation, Path]:
    """Re-solve a training run's scenario from its saved models.

    Reads the config snapshot, seed and model files of ``directory``, runs the
    noise-free joint rollout and writes ``eval_allocation.csv`` next to them.

    Raises:
        ArtifactError: If the directory is not a complete training run
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.get("kind") != "train":
        raise ArtifactError(f"{directory} is not a training run")
    seed = int(manifest["seed"])
    cfg = build_experiment_config(read_config_snapshot(directory))
    s = build_scenario(cfg.scenario, seed)
    dqn = DqnAgent.load(directory / MODEL_FILENAME, s, cfg.dqn)
    ac = ActorCritic.load(directory, cfg.ddpg)
    solution = solve_joint(
        s, dqn, ac, cfg.ddpg, cfg.experiment.eval_episodes, fading_mode(cfg, seed)
    )
    path = write_allocation_csv(
        directory / "eval_allocation.csv", s, solution.best, "joint"
    )
    return solution.best, path
