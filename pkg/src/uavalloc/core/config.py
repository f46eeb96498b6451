"""Configuration management for uavalloc.

Handles loading the layered experiment configuration from built-in defaults,
a TOML file, environment variables and command-line overrides, and turns the
merged mapping into a validated, immutable ``ExperimentConfig``.
"""

import copy
import dataclasses
import hashlib
import json
import os
import tomllib
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

from dotenv import load_dotenv

from .errors import ConfigError, ErrorSeverity, handle_errors, log_error
from .interfaces import ConfigProvider

# Load environment variables from .env file
load_dotenv()

CONFIG_FILENAME = ".uavalloc.toml"

SWEEP_AXES = ("threshold", "total_bandwidth", "height", "total_power", "fading")
FADING_MODES = ("expected", "sampled")
NOISE_KINDS = ("gaussian", "ou")
OPTIMIZERS = ("adam", "sgd")

# Desk-scale defaults; local choices are listed in DESIGN.md
DEFAULTS: dict[str, Any] = {
    "scenario": {
        "radius_m": 200.0,
        "uav_height_m": 400.0,
        "n_users": 10,
        "block_hz": 1600.0,
        "n_blocks": 200,
        "total_power": 1.0,
        "rate_threshold_bps": 1.0e6,
        "constants": {
            "pathloss_los": 2.5,
            "pathloss_nlos": 3.5,
            "env_b": 0.136,
            "env_c": 11.95,
            "noise_psd": 1.0e-16,
            "mean_gain": 0.5,
            "rice_k": 10.0,
        },
    },
    "channel": {
        "fading": "expected",
    },
    "dqn": {
        "learning_rate": 1.0e-4,
        "buffer_size": 1_000_000,
        "batch_size": 32,
        "gamma": 0.99,
        "train_freq": 4,
        "learning_starts": 100,
        "tau": 1.0,
        "hidden": [64, 64],
        "optimizer": "adam",
        "episodes": 2000,
        "max_steps": 500,
        "eps_start": 1.0,
        "eps_end": 0.05,
        "eps_fraction": 0.1,
        "p_min": 0.0005,
        "p_max": 0.0,
        "init_blocks_max": 0,
        "power_decimals": 4,
    },
    "ddpg": {
        "actor_learning_rate": 1.0e-3,
        "critic_learning_rate": 1.0e-3,
        "buffer_size": 1_000_000,
        "batch_size": 256,
        "gamma": 0.99,
        "train_freq": 1,
        "learning_starts": 100,
        "tau": 0.005,
        "hidden": [64, 64],
        "optimizer": "adam",
        "episodes": 300,
        "max_steps": 200,
        "delta_max": 0.002,
        "p_max": 0.0,
        "noise": "gaussian",
        "noise_sigma": 0.1,
        "ou_theta": 0.15,
        "power_penalty": 10.0,
    },
    "experiment": {
        "seeds": [0, 1, 2, 3, 4],
        "out_dir": "runs",
        "workers": 1,
        "eval_episodes": 3,
        "sweep_axis": "none",
        "sweep_values": [],
        "fading_mean_gains": [],
        "threshold_values": [],
        "convergence_window": 20,
        "convergence_max_std": 0.5,
        "log_every": 100,
        "full_scale": False,
    },
}

# Keys that may be present but have no default value
OPTIONAL_KEYS: dict[str, tuple[str, ...]] = {
    "scenario": ("total_bandwidth_hz", "rate_threshold_range_bps", "layout_seed"),
}

# Published scale, behind --full-scale
FULL_SCALE: dict[str, Any] = {
    "scenario": {"n_users": 50, "n_blocks": 1000},
    "dqn": {"p_max": 0.05},
}


@dataclass(frozen=True)
class ConstantsConfig:
    """Environmental constants of the channel model."""

    pathloss_los: float
    pathloss_nlos: float
    env_b: float
    env_c: float
    noise_psd: float
    mean_gain: float
    rice_k: float


@dataclass(frozen=True)
class ScenarioConfig:
    """Field, population and budget settings."""

    radius_m: float
    uav_height_m: float
    n_users: int
    block_hz: float
    n_blocks: int
    total_power: float
    rate_threshold_bps: Union[float, tuple[float, ...]]
    constants: ConstantsConfig
    rate_threshold_range_bps: Optional[tuple[float, float]] = None
    layout_seed: Optional[int] = None


@dataclass(frozen=True)
class ChannelConfig:
    """Fading handling for the channel model."""

    fading: str


@dataclass(frozen=True)
class DqnConfig:
    """Hyperparameters of the bandwidth agent."""

    learning_rate: float
    buffer_size: int
    batch_size: int
    gamma: float
    train_freq: int
    learning_starts: int
    tau: float
    hidden: tuple[int, ...]
    optimizer: str
    episodes: int
    max_steps: int
    eps_start: float
    eps_end: float
    eps_fraction: float
    p_min: float
    p_max: float
    init_blocks_max: int
    power_decimals: int


@dataclass(frozen=True)
class DdpgConfig:
    """Hyperparameters of the power agent."""

    actor_learning_rate: float
    critic_learning_rate: float
    buffer_size: int
    batch_size: int
    gamma: float
    train_freq: int
    learning_starts: int
    tau: float
    hidden: tuple[int, ...]
    optimizer: str
    episodes: int
    max_steps: int
    delta_max: float
    p_max: float
    noise: str
    noise_sigma: float
    ou_theta: float
    power_penalty: float


@dataclass(frozen=True)
class ExperimentSettings:
    """Seeds, output location and sweep selection."""

    seeds: tuple[int, ...]
    out_dir: str
    workers: int
    eval_episodes: int
    sweep_axis: str
    sweep_values: tuple[float, ...]
    fading_mean_gains: tuple[float, ...]
    threshold_values: tuple[float, ...]
    convergence_window: int
    convergence_max_std: float
    log_every: int
    full_scale: bool


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete, validated configuration of one experiment."""

    scenario: ScenarioConfig
    channel: ChannelConfig
    dqn: DqnConfig
    ddpg: DdpgConfig
    experiment: ExperimentSettings

    def to_mapping(self) -> dict[str, Any]:
        """Return a plain, JSON/TOML friendly mapping of this configuration."""
        return _plain(dataclasses.asdict(self))

    def config_hash(self) -> str:
        """Return the sha256 of the canonical JSON form of this configuration."""
        canonical = json.dumps(
            self.to_mapping(), sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def replace(self, overrides: Mapping[str, Any]) -> "ExperimentConfig":
        """Return a new configuration with dotted-key overrides applied.

        Args:
            overrides: Mapping of ``section.key`` (or ``scenario.constants.key``)
                to new values

        Returns:
            The revalidated configuration
        """
        mapping = self.to_mapping()
        for dotted, value in overrides.items():
            _set_dotted(mapping, dotted, value)
        return build_experiment_config(mapping)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items() if v is not None}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def deep_merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> dict[str, Any]:
    """Recursively merge ``update`` into a copy of ``base``."""
    merged = copy.deepcopy(dict(base))
    for key, value in update.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _set_dotted(mapping: dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = mapping
    for part in parts[:-1]:
        child = node.get(part)
        if not isinstance(child, dict):
            raise ConfigError(f"Unknown configuration section: {dotted}")
        node = child
    node[parts[-1]] = value


def parse_override(assignment: str) -> tuple[str, Any]:
    """Parse a ``section.key=value`` command-line override.

    The value is read as a TOML literal when possible (numbers, booleans,
    arrays, quoted strings) and kept as a bare string otherwise.

    Args:
        assignment: The raw ``--set`` argument

    Returns:
        The dotted key and the parsed value

    Raises:
        ConfigError: If the assignment has no ``=`` or no key
    """
    key, sep, raw = assignment.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(
            f"Override must look like section.key=value: {assignment!r}"
        )
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def _coerce(key: str, value: Any, default: Any) -> Any:
    """Coerce ``value`` to the type of ``default``, naming ``key`` on failure."""
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in _BOOL_WORDS:
            return value.lower() in ("1", "true", "yes")
        raise ConfigError(f"{key}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, (int, float, str)):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        try:
            as_float = float(value)
        except ValueError as e:
            raise ConfigError(f"{key}: expected an integer, got {value!r}") from e
        if not as_float.is_integer():
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(as_float)
    if isinstance(default, float):
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from e
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        item_default: Any = default[0] if default else 0.0
        return tuple(
            _coerce(f"{key}[{i}]", v, item_default) for i, v in enumerate(value)
        )
    return value


_BOOL_WORDS = ("1", "true", "yes", "0", "false", "no")


def _build_section(
    cls: type,
    section: str,
    values: Mapping[str, Any],
    defaults: Mapping[str, Any],
) -> Any:
    for key in values:
        if key not in defaults:
            raise ConfigError(f"Unknown configuration key: {section}.{key}")
    kwargs: dict[str, Any] = {}
    for f in dataclasses.fields(cls):
        key = f"{section}.{f.name}"
        if f.name not in values:
            raise ConfigError(f"Missing required configuration key: {key}")
        kwargs[f.name] = _coerce(key, values[f.name], defaults[f.name])
    return cls(**kwargs)


def _require(condition: bool, key: str, message: str) -> None:
    if not condition:
        raise ConfigError(f"{key}: {message}")


def _build_scenario(values: Mapping[str, Any]) -> ScenarioConfig:
    defaults = DEFAULTS["scenario"]
    known = set(defaults) | set(OPTIONAL_KEYS["scenario"])
    for key in values:
        if key not in known:
            raise ConfigError(f"Unknown configuration key: scenario.{key}")

    def required(name: str) -> Any:
        if name not in values:
            raise ConfigError(f"Missing required configuration key: scenario.{name}")
        return _coerce(f"scenario.{name}", values[name], defaults[name])

    constants_values = values.get("constants")
    if not isinstance(constants_values, Mapping):
        raise ConfigError("Missing required configuration table: scenario.constants")
    constants = _build_section(
        ConstantsConfig,
        "scenario.constants",
        constants_values,
        defaults["constants"],
    )

    block_hz = required("block_hz")
    n_blocks = required("n_blocks")
    if values.get("total_bandwidth_hz") is not None:
        total_bw = _coerce(
            "scenario.total_bandwidth_hz", values["total_bandwidth_hz"], 0.0
        )
        _require(block_hz > 0, "scenario.block_hz", "must be positive")
        n_blocks = round(total_bw / block_hz)
        _require(
            n_blocks >= 1 and abs(n_blocks * block_hz - total_bw) <= 1e-9 * total_bw,
            "scenario.total_bandwidth_hz",
            f"{total_bw} Hz is not a whole number of {block_hz} Hz blocks",
        )

    threshold: Union[float, tuple[float, ...]]
    if isinstance(values.get("rate_threshold_bps"), (list, tuple)):
        threshold = _coerce(
            "scenario.rate_threshold_bps", values["rate_threshold_bps"], [0.0]
        )
    else:
        threshold = required("rate_threshold_bps")

    range_bps = values.get("rate_threshold_range_bps")
    if range_bps is not None:
        bounds = _coerce("scenario.rate_threshold_range_bps", range_bps, [0.0])
        _require(
            len(bounds) == 2 and 0 < bounds[0] <= bounds[1],
            "scenario.rate_threshold_range_bps",
            "need [lo, hi] with 0 < lo <= hi",
        )
        range_bps = (bounds[0], bounds[1])

    layout_seed = values.get("layout_seed")
    if layout_seed is not None:
        layout_seed = _coerce("scenario.layout_seed", layout_seed, 0)

    scenario = ScenarioConfig(
        radius_m=required("radius_m"),
        uav_height_m=required("uav_height_m"),
        n_users=required("n_users"),
        block_hz=block_hz,
        n_blocks=n_blocks,
        total_power=required("total_power"),
        rate_threshold_bps=threshold,
        constants=constants,
        rate_threshold_range_bps=range_bps,
        layout_seed=layout_seed,
    )
    _validate_scenario(scenario)
    return scenario


def _validate_scenario(s: ScenarioConfig) -> None:
    _require(s.radius_m > 0, "scenario.radius_m", "must be positive")
    _require(s.uav_height_m > 0, "scenario.uav_height_m", "must be positive")
    _require(s.n_users >= 1, "scenario.n_users", "must be at least 1")
    _require(s.block_hz > 0, "scenario.block_hz", "must be positive")
    _require(s.n_blocks >= 1, "scenario.n_blocks", "must be at least 1")
    _require(s.total_power > 0, "scenario.total_power", "must be positive")
    if isinstance(s.rate_threshold_bps, tuple):
        _require(
            len(s.rate_threshold_bps) == s.n_users,
            "scenario.rate_threshold_bps",
            f"per-user list has {len(s.rate_threshold_bps)} entries for "
            f"{s.n_users} users",
        )
        _require(
            all(t > 0 for t in s.rate_threshold_bps),
            "scenario.rate_threshold_bps",
            "must be positive",
        )
    else:
        _require(
            s.rate_threshold_bps > 0, "scenario.rate_threshold_bps", "must be positive"
        )
    c = s.constants
    _require(c.pathloss_los > 0, "scenario.constants.pathloss_los", "must be positive")
    _require(
        c.pathloss_nlos > c.pathloss_los,
        "scenario.constants.pathloss_nlos",
        "must exceed pathloss_los",
    )
    _require(c.env_b > 0, "scenario.constants.env_b", "must be positive")
    _require(c.env_c > 0, "scenario.constants.env_c", "must be positive")
    _require(c.noise_psd > 0, "scenario.constants.noise_psd", "must be positive")
    _require(c.mean_gain > 0, "scenario.constants.mean_gain", "must be positive")
    _require(c.rice_k >= 0, "scenario.constants.rice_k", "must be non-negative")


def _validate_agent(section: str, cfg: Union[DqnConfig, DdpgConfig]) -> None:
    _require(cfg.buffer_size >= 1, f"{section}.buffer_size", "must be at least 1")
    _require(cfg.batch_size >= 1, f"{section}.batch_size", "must be at least 1")
    _require(0 <= cfg.gamma <= 1, f"{section}.gamma", "must lie in [0, 1]")
    _require(cfg.train_freq >= 1, f"{section}.train_freq", "must be at least 1")
    _require(cfg.learning_starts >= 0, f"{section}.learning_starts", "must be >= 0")
    _require(0 < cfg.tau <= 1, f"{section}.tau", "must lie in (0, 1]")
    _require(
        len(cfg.hidden) >= 1 and all(h >= 1 for h in cfg.hidden),
        f"{section}.hidden",
        "needs at least one positive layer width",
    )
    _require(
        cfg.optimizer in OPTIMIZERS, f"{section}.optimizer", f"one of {OPTIMIZERS}"
    )
    _require(cfg.episodes >= 1, f"{section}.episodes", "must be at least 1")
    _require(cfg.max_steps >= 1, f"{section}.max_steps", "must be at least 1")


def build_experiment_config(mapping: Mapping[str, Any]) -> ExperimentConfig:
    """Validate a merged configuration mapping.

    Args:
        mapping: Nested mapping with the sections of ``DEFAULTS``

    Returns:
        The immutable experiment configuration

    Raises:
        ConfigError: On unknown or missing keys, wrong types or violated
            invariants, always naming the offending dotted key
    """
    for section in mapping:
        if section not in DEFAULTS:
            raise ConfigError(f"Unknown configuration section: {section}")
    for section in DEFAULTS:
        if not isinstance(mapping.get(section), Mapping):
            raise ConfigError(f"Missing required configuration table: {section}")

    scenario = _build_scenario(mapping["scenario"])
    channel = _build_section(
        ChannelConfig, "channel", mapping["channel"], DEFAULTS["channel"]
    )
    _require(
        channel.fading in FADING_MODES, "channel.fading", f"one of {FADING_MODES}"
    )

    dqn = _build_section(DqnConfig, "dqn", mapping["dqn"], DEFAULTS["dqn"])
    _validate_agent("dqn", dqn)
    _require(
        0 <= dqn.eps_end <= dqn.eps_start <= 1,
        "dqn.eps_start",
        "need 1 >= eps_start >= eps_end >= 0",
    )
    _require(0 < dqn.eps_fraction <= 1, "dqn.eps_fraction", "must lie in (0, 1]")
    _require(dqn.p_max >= 0, "dqn.p_max", "must be >= 0 (0 means total_power)")
    _require(
        0 <= dqn.p_min and (dqn.p_max == 0 or dqn.p_min < dqn.p_max),
        "dqn.p_min",
        "need 0 <= p_min < p_max",
    )
    _require(dqn.init_blocks_max >= 0, "dqn.init_blocks_max", "must be >= 0")
    _require(dqn.power_decimals >= 0, "dqn.power_decimals", "must be >= 0")

    ddpg = _build_section(DdpgConfig, "ddpg", mapping["ddpg"], DEFAULTS["ddpg"])
    _validate_agent("ddpg", ddpg)
    _require(ddpg.delta_max > 0, "ddpg.delta_max", "must be positive")
    _require(ddpg.p_max >= 0, "ddpg.p_max", "must be >= 0 (0 means total_power)")
    _require(ddpg.noise in NOISE_KINDS, "ddpg.noise", f"one of {NOISE_KINDS}")
    _require(ddpg.noise_sigma >= 0, "ddpg.noise_sigma", "must be >= 0")
    _require(ddpg.power_penalty >= 0, "ddpg.power_penalty", "must be >= 0")

    experiment = _build_section(
        ExperimentSettings, "experiment", mapping["experiment"], DEFAULTS["experiment"]
    )
    _require(len(experiment.seeds) >= 1, "experiment.seeds", "must not be empty")
    _require(experiment.workers >= 1, "experiment.workers", "must be at least 1")
    _require(
        experiment.eval_episodes >= 1, "experiment.eval_episodes", "must be >= 1"
    )
    _require(
        experiment.convergence_window >= 2,
        "experiment.convergence_window",
        "must be >= 2",
    )
    _require(
        experiment.convergence_max_std > 0,
        "experiment.convergence_max_std",
        "must be positive",
    )
    _require(experiment.log_every >= 1, "experiment.log_every", "must be at least 1")
    _require(
        experiment.sweep_axis in SWEEP_AXES + ("none",),
        "experiment.sweep_axis",
        f"one of {SWEEP_AXES}",
    )
    if experiment.sweep_axis == "fading":
        _require(
            all(v >= 0 for v in experiment.sweep_values),
            "experiment.sweep_values",
            "Rice factors must be non-negative",
        )
        _require(
            all(v > 0 for v in experiment.fading_mean_gains),
            "experiment.fading_mean_gains",
            "must be positive",
        )
    else:
        _require(
            all(v > 0 for v in experiment.sweep_values),
            "experiment.sweep_values",
            "must be positive",
        )
    if experiment.sweep_axis == "total_power":
        _require(
            all(v > 0 for v in experiment.threshold_values),
            "experiment.threshold_values",
            "must be positive",
        )

    return ExperimentConfig(
        scenario=scenario, channel=channel, dqn=dqn, ddpg=ddpg, experiment=experiment
    )


class Config(ConfigProvider):
    """Layered configuration provider.

    Merges built-in defaults, the optional full-scale overrides, a TOML file,
    ``UAVALLOC_*`` environment variables and explicit overrides, in that order.
    """

    def __init__(
        self,
        path: Optional[Union[str, Path]] = None,
        overrides: Optional[Mapping[str, Any]] = None,
        full_scale: Optional[bool] = None,
    ):
        """Initialize the configuration provider.

        Args:
            path: TOML file to read; defaults to ``.uavalloc.toml`` in the cwd
            overrides: Dotted-key overrides applied last (CLI flags)
            full_scale: Force the full scale on or off
        """
        self.path = Path(path) if path is not None else Path(".") / CONFIG_FILENAME
        self.explicit_path = path is not None
        self.overrides = dict(overrides or {})
        self.full_scale = full_scale
        self._cache: Optional[dict[str, Any]] = None
        self._cache_mtime: Optional[float] = None

    def _file_mtime(self) -> Optional[float]:
        return self.path.stat().st_mtime if self.path.exists() else None

    def _read_file(self) -> dict[str, Any]:
        if not self.path.exists():
            if self.explicit_path:
                raise ConfigError(f"Configuration file not found: {self.path}")
            return {}
        try:
            return tomllib.loads(self.path.read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Failed to parse {self.path}: {e}") from e

    def _env_layer(self) -> dict[str, Any]:
        layer: dict[str, Any] = {}
        if seed := self.get_env("UAVALLOC_SEED"):
            try:
                layer["experiment.seeds"] = [int(s) for s in seed.split(",")]
            except ValueError:
                log_error(
                    ConfigError(f"Invalid UAVALLOC_SEED value: {seed}"),
                    severity=ErrorSeverity.WARNING,
                )
        if out_dir := self.get_env("UAVALLOC_OUT_DIR"):
            layer["experiment.out_dir"] = out_dir
        if workers := self.get_env("UAVALLOC_WORKERS"):
            try:
                layer["experiment.workers"] = int(workers)
            except ValueError:
                log_error(
                    ConfigError(f"Invalid UAVALLOC_WORKERS value: {workers}"),
                    severity=ErrorSeverity.WARNING,
                )
        if full_scale := self.get_env("UAVALLOC_FULL_SCALE"):
            layer["experiment.full_scale"] = full_scale.lower() in ("1", "true", "yes")
        return layer

    def _merge(self, with_full_scale: bool) -> dict[str, Any]:
        merged = copy.deepcopy(DEFAULTS)
        if with_full_scale:
            merged = deep_merge(merged, FULL_SCALE)
        merged = deep_merge(merged, self._read_file())
        for layer in (self._env_layer(), self.overrides):
            for dotted, value in layer.items():
                _set_dotted(merged, dotted, value)
        return merged

    def get_config(self) -> dict[str, Any]:
        """Get the complete merged configuration mapping.

        Returns:
            The merged configuration as a nested dictionary

        Raises:
            ConfigError: If the TOML file cannot be read or parsed
        """
        mtime = self._file_mtime()
        if self._cache is not None and mtime == self._cache_mtime:
            return copy.deepcopy(self._cache)

        merged = self._merge(with_full_scale=False)
        full_scale = self.full_scale
        if full_scale is None:
            full_scale = bool(merged["experiment"].get("full_scale", False))
        if full_scale:
            merged = self._merge(with_full_scale=True)
            merged["experiment"]["full_scale"] = True

        self._cache = merged
        self._cache_mtime = mtime
        return copy.deepcopy(merged)

    def get_value(self, key: str, default: Optional[Any] = None) -> Any:
        """Get a configuration value by dotted key.

        Args:
            key: Dotted key such as ``dqn.learning_rate``
            default: Value returned when the key does not exist

        Returns:
            The configuration value, or ``default``
        """
        node: Any = self.get_config()
        for part in key.split("."):
            if not isinstance(node, Mapping) or part not in node:
                return default
            node = node[part]
        return node

    @handle_errors(ConfigError, severity=ErrorSeverity.INFO)
    def get_env(self, key: str) -> Optional[str]:
        """Get an environment variable value.

        Args:
            key: The environment variable name.

        Returns:
            The value of the environment variable or None if not set.
        """
        return os.getenv(key)

    def experiment_config(self) -> ExperimentConfig:
        """Build the validated experiment configuration.

        Returns:
            The immutable experiment configuration

        Raises:
            ConfigError: If any layer contributes an invalid value
        """
        return build_experiment_config(self.get_config())


def default_config() -> ExperimentConfig:
    """Return the desk-scale defaults as an ``ExperimentConfig``."""
    return build_experiment_config(DEFAULTS)


def load_experiment_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    full_scale: Optional[bool] = None,
) -> ExperimentConfig:
    """Load and validate the layered experiment configuration."""
    return Config(path, overrides, full_scale).experiment_config()
