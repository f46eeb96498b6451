"""Static figures from the tidy CSVs (needs the optional ``plot`` extra)."""

from collections.abc import Callable
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from ..core.errors import ArtifactError, logger
from .artifacts import (
    COMPARISON_SCHEMA,
    DDPG_EPISODES_SCHEMA,
    DQN_LOG_SCHEMA,
    SWEEP_SCHEMA,
    read_csv,
)


def _pyplot() -> Any:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as e:
        raise ArtifactError(
            "Plotting needs matplotlib; install uavalloc with the 'plot' extra"
        ) from e
    return plt


def _trailing_mean(values: np.ndarray, window: int) -> np.ndarray:
    if values.size < window:
        return values
    return np.convolve(values, np.ones(window) / window, mode="valid")


def _plot_dqn_log(ax: Any, rows: list[dict[str, str]], window: int) -> None:
    steps = np.array([float(r["steps_to_terminal"]) for r in rows])
    ax.plot(np.arange(1, steps.size + 1), steps, alpha=0.3, label="per episode")
    smooth = _trailing_mean(steps, window)
    ax.plot(np.arange(steps.size - smooth.size + 1, steps.size + 1), smooth)
    ax.set_xlabel("episode")
    ax.set_ylabel("steps to terminal")


def _plot_ddpg_episodes(ax: Any, rows: list[dict[str, str]], window: int) -> None:
    reward = np.array([float(r["cumulative_reward"]) for r in rows])
    ax.plot(np.arange(1, reward.size + 1), reward, alpha=0.3, label="per episode")
    smooth = _trailing_mean(reward, window)
    ax.plot(np.arange(reward.size - smooth.size + 1, reward.size + 1), smooth)
    ax.set_xlabel("episode")
    ax.set_ylabel("cumulative reward")


def _series_label(gain: str, threshold: str) -> Optional[str]:
    parts = []
    if gain:
        parts.append(f"mean gain {gain}")
    if threshold:
        parts.append(f"threshold {float(threshold):g} bps")
    return ", ".join(parts) or None


def _plot_sweep(ax: Any, rows: list[dict[str, str]], window: int) -> None:
    column = "best_mean_n_s" if rows[0].get("best_mean_n_s") else "best_n_s"
    series: dict[tuple[str, str], dict[float, list[float]]] = {}
    for r in rows:
        key = (r.get("mean_gain", ""), r.get("threshold_bps", ""))
        points = series.setdefault(key, {})
        points.setdefault(float(r["value"]), []).append(float(r[column]))
    for (gain, threshold), points in series.items():
        xs = sorted(points)
        ax.plot(
            xs,
            [np.median(points[x]) for x in xs],
            marker="o",
            label=_series_label(gain, threshold),
        )
    ax.set_xlabel(rows[0]["axis"])
    ax.set_ylabel("median served users")


def _plot_comparison(ax: Any, rows: list[dict[str, str]], window: int) -> None:
    methods: dict[str, list[float]] = {}
    for r in rows:
        methods.setdefault(r["method"], []).append(float(r["n_s"]))
    names = list(methods)
    ax.bar(names, [np.median(methods[m]) for m in names])
    ax.set_ylabel("median served users")


PLOTTERS: dict[str, Callable[[Any, list[dict[str, str]], int], None]] = {
    DQN_LOG_SCHEMA: _plot_dqn_log,
    DDPG_EPISODES_SCHEMA: _plot_ddpg_episodes,
    SWEEP_SCHEMA: _plot_sweep,
    COMPARISON_SCHEMA: _plot_comparison,
}


def render_csv(
    csv_path: Union[str, Path],
    out_path: Optional[Union[str, Path]] = None,
    window: int = 20,
) -> Path:
    """Draw the figure that matches the CSV's schema.

    Args:
        csv_path: A DQN log, DDPG episode summary, sweep or comparison CSV
        out_path: Image path, defaults to the CSV path with a ``.png`` suffix
        window: Smoothing window for training curves

    Returns:
        The written image path

    Raises:
        ArtifactError: If the schema has no figure or matplotlib is missing
    """
    csv_path = Path(csv_path)
    schema, rows = read_csv(csv_path)
    plotter = PLOTTERS.get(schema)
    if plotter is None:
        raise ArtifactError(f"No figure for schema {schema!r}")
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        plotter(ax, rows, window)
        if ax.get_legend_handles_labels()[1]:
            ax.legend()
        ax.grid(True, alpha=0.3)
        out = Path(out_path) if out_path is not None else csv_path.with_suffix(".png")
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=120, bbox_inches="tight")
    except OSError as e:
        raise ArtifactError(f"Failed to save figure for {csv_path}: {e}") from e
    finally:
        plt.close(fig)
    logger.info("Rendered %s", out)
    return out
