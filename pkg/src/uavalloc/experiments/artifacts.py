"""Artifact writers: versioned CSVs, run manifests and config snapshots.

Every CSV starts with a ``schema`` column holding the schema id of its rows.
Floats are written with ``repr`` and manifests are JSON with sorted keys and
no timestamps, so identical runs produce byte-identical files.
"""

import csv
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any, Optional, Union

import git
import numpy as np

from .._version import __version__
from ..agents.ddpg_power import DdpgTrainingRun
from ..agents.dqn_bandwidth import DqnTrainingRun
from ..allocation.allocator import Allocation, allocation_rows
from ..core.config import ExperimentConfig
from ..core.errors import ArtifactError, ErrorSeverity, handle_errors, logger
from ..model.scenario import Scenario

DQN_LOG_SCHEMA = "dqn_log/v1"
DDPG_STEPS_SCHEMA = "ddpg_steps/v1"
DDPG_EPISODES_SCHEMA = "ddpg_episodes/v1"
ALLOCATION_SCHEMA = "allocation/v1"
SWEEP_SCHEMA = "sweep/v1"
COMPARISON_SCHEMA = "comparison/v1"
RATIOS_SCHEMA = "ratios/v1"

MANIFEST_FILENAME = "manifest.json"
CONFIG_SNAPSHOT_FILENAME = "config.json"

# Defaults picked locally rather than taken from published settings
DECLARED_DEFAULTS = (
    "scenario.n_users",
    "scenario.n_blocks",
    "dqn.episodes",
    "dqn.max_steps",
    "dqn.eps_start",
    "dqn.eps_end",
    "dqn.eps_fraction",
    "dqn.hidden",
    "dqn.optimizer",
    "dqn.p_min",
    "dqn.p_max",
    "ddpg.episodes",
    "ddpg.max_steps",
    "ddpg.delta_max",
    "ddpg.hidden",
    "ddpg.optimizer",
    "ddpg.noise",
    "ddpg.noise_sigma",
    "ddpg.power_penalty",
)


def format_value(value: Any) -> str:
    """Render one CSV cell.

    Floats use ``repr`` (non-finite values become ``nan``/``inf``), booleans
    are ``true``/``false`` and None is an empty cell.
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return repr(f) if math.isfinite(f) else str(f)
    return str(value)


def write_csv(
    path: Union[str, Path],
    schema: str,
    rows: Iterable[Mapping[str, Any]],
    fieldnames: Optional[Sequence[str]] = None,
) -> Path:
    """Write ``rows`` as a UTF-8 CSV whose first column is the schema id.

    Args:
        path: Destination file; parent directories are created
        schema: Versioned schema id such as ``sweep/v1``
        rows: Row mappings, all with the same keys
        fieldnames: Column order; defaults to the first row's keys

    Returns:
        The written path

    Raises:
        ArtifactError: If the file cannot be written or a row has other keys
    """
    path = Path(path)
    rows = list(rows)
    columns = list(fieldnames) if fieldnames is not None else []
    if fieldnames is None and rows:
        columns = list(rows[0])
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.DictWriter(
                f, fieldnames=["schema", *columns], lineterminator="\n"
            )
            writer.writeheader()
            for row in rows:
                writer.writerow(
                    {"schema": schema, **{k: format_value(v) for k, v in row.items()}}
                )
    except ValueError as e:
        raise ArtifactError(f"Row does not match the columns of {path}: {e}") from e
    except OSError as e:
        raise ArtifactError(f"Failed to write {path}: {e}") from e
    logger.debug("Wrote %d %s rows to %s", len(rows), schema, path)
    return path


def read_csv(path: Union[str, Path]) -> tuple[str, list[dict[str, str]]]:
    """Read a CSV written by ``write_csv``.

    Returns:
        The schema id and the rows without the schema column

    Raises:
        ArtifactError: If the file is missing, empty or has no schema column
    """
    path = Path(path)
    try:
        with path.open(encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f)
            if not reader.fieldnames or reader.fieldnames[0] != "schema":
                raise ArtifactError(f"{path} has no schema column")
            rows = list(reader)
    except OSError as e:
        raise ArtifactError(f"Failed to read {path}: {e}") from e
    if not rows:
        raise ArtifactError(f"{path} has no rows")
    schema = rows[0].pop("schema")
    for row in rows[1:]:
        row.pop("schema")
    return schema, rows


def write_allocation_csv(
    path: Union[str, Path], s: Scenario, alloc: Allocation, method: str = ""
) -> Path:
    """Per-user allocation table, optionally tagged with the method name."""
    rows = [{"method": method, **row} for row in allocation_rows(s, alloc)]
    return write_csv(
        path,
        ALLOCATION_SCHEMA,
        rows,
        ["method", "user", "x", "y", "power", "blocks", "rate_bps", "served"],
    )


def write_dqn_log(path: Union[str, Path], run: DqnTrainingRun) -> Path:
    return write_csv(
        path,
        DQN_LOG_SCHEMA,
        (
            {
                "episode": r.episode,
                "steps_to_terminal": r.steps_to_terminal,
                "final_blocks": r.final_blocks,
                "final_reward": r.final_reward,
                "discounted_return": r.discounted_return,
                "epsilon": r.epsilon,
                "truncated": r.truncated,
            }
            for r in run.log
        ),
        [
            "episode",
            "steps_to_terminal",
            "final_blocks",
            "final_reward",
            "discounted_return",
            "epsilon",
            "truncated",
        ],
    )


def write_ddpg_logs(
    directory: Union[str, Path], run: DdpgTrainingRun, prefix: str = "ddpg"
) -> tuple[Path, Path]:
    """Write the step log and the per-episode summary of a power agent run.

    Returns:
        The step log path and the episode summary path
    """
    d = Path(directory)
    steps = write_csv(
        d / f"{prefix}_steps.csv",
        DDPG_STEPS_SCHEMA,
        (vars(r) for r in run.steps),
        ["episode", "step", "n_s", "sum_power", "sum_blocks", "penalty", "reward"],
    )
    episodes = write_csv(
        d / f"{prefix}_episodes.csv",
        DDPG_EPISODES_SCHEMA,
        (vars(e) for e in run.episodes),
        [
            "episode",
            "cumulative_reward",
            "discounted_return",
            "final_n_s",
            "best_feasible_n_s",
            "sum_power",
        ],
    )
    return steps, episodes


@handle_errors(Exception, severity=ErrorSeverity.INFO)
def git_commit(path: Union[str, Path] = ".") -> Optional[str]:
    """Commit hash of the repository containing ``path``, None outside one."""
    try:
        repo = git.Repo(path, search_parent_directories=True)
    except (git.InvalidGitRepositoryError, git.NoSuchPathError):
        return None
    try:
        sha = repo.head.commit.hexsha
    except ValueError:
        # no commits yet
        return None
    return f"{sha}-dirty" if repo.is_dirty() else sha


def hyperparameters(cfg: ExperimentConfig) -> dict[str, Any]:
    """The published learning hyperparameters of both agents."""
    return {
        "dqn": {
            "policy": "MultiInputPolicy",
            "learning_rate": cfg.dqn.learning_rate,
            "buffer_size": cfg.dqn.buffer_size,
            "learning_starts": cfg.dqn.learning_starts,
            "batch_size": cfg.dqn.batch_size,
            "tau": cfg.dqn.tau,
            "gamma": cfg.dqn.gamma,
            "train_freq": cfg.dqn.train_freq,
        },
        "ddpg": {
            "policy": "MultiInputPolicy",
            "learning_rate": cfg.ddpg.actor_learning_rate,
            "buffer_size": cfg.ddpg.buffer_size,
            "learning_starts": cfg.ddpg.learning_starts,
            "batch_size": cfg.ddpg.batch_size,
            "tau": cfg.ddpg.tau,
            "gamma": cfg.ddpg.gamma,
            "train_freq": cfg.ddpg.train_freq,
        },
    }


def build_manifest(
    cfg: ExperimentConfig, seed: Optional[int], kind: str, **extra: Any
) -> dict[str, Any]:
    """Self-describing record of one run.

    Args:
        cfg: The experiment configuration
        seed: Root seed of the run, None for multi-seed runs
        kind: Run kind (``train``, ``sweep``, ``compare``, ``oracle``, ``eval``)
        **extra: Additional JSON-serialisable entries

    Returns:
        The manifest mapping
    """
    mapping = cfg.to_mapping()
    chosen: dict[str, Any] = {}
    for dotted in DECLARED_DEFAULTS:
        section, key = dotted.split(".")
        chosen[dotted] = mapping[section][key]
    logger.info(
        "%s run uses locally chosen defaults: %s",
        kind,
        ", ".join(f"{k}={v}" for k, v in chosen.items()),
    )
    return {
        "kind": kind,
        "seed": seed,
        "version": __version__,
        "git_commit": git_commit(),
        "config": mapping,
        "config_hash": cfg.config_hash(),
        "hyperparameters": hyperparameters(cfg),
        "declared_defaults": list(DECLARED_DEFAULTS),
        **extra,
    }


def _dump_json(path: Path, payload: Mapping[str, Any]) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n",
            encoding="utf-8",
        )
    except (OSError, TypeError, ValueError) as e:
        raise ArtifactError(f"Failed to write {path}: {e}") from e
    return path


def write_manifest(directory: Union[str, Path], manifest: Mapping[str, Any]) -> Path:
    return _dump_json(Path(directory) / MANIFEST_FILENAME, manifest)


def write_config_snapshot(directory: Union[str, Path], cfg: ExperimentConfig) -> Path:
    return _dump_json(Path(directory) / CONFIG_SNAPSHOT_FILENAME, cfg.to_mapping())


def read_manifest(directory: Union[str, Path]) -> dict[str, Any]:
    """Load the manifest of an artifact directory.

    Raises:
        ArtifactError: If the manifest is missing or not valid JSON
    """
    path = Path(directory) / MANIFEST_FILENAME
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f"Failed to read {path}: {e}") from e


def read_config_snapshot(directory: Union[str, Path]) -> dict[str, Any]:
    """Load the configuration mapping saved with a run."""
    path = Path(directory) / CONFIG_SNAPSHOT_FILENAME
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ArtifactError(f"Failed to read {path}: {e}") from e
