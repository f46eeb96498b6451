"""Template strings for uavalloc.

This module contains the annotated configuration file that ``uavalloc init``
writes, rendered with jinja2 from the built-in defaults.
"""

import json
from collections.abc import Mapping
from typing import Any, Optional

import jinja2

from uavalloc.core.config import DEFAULTS

# Key annotations, shown as trailing comments
KEY_NOTES: dict[str, str] = {
    "scenario.radius_m": "R, radius of the served disk (m)",
    "scenario.uav_height_m": "h, UAV hover height (m)",
    "scenario.n_users": "N, ground users (50 at full scale)",
    "scenario.block_hz": "B, width of one resource block (Hz)",
    "scenario.n_blocks": "B_t / B, blocks to share (1000 at full scale)",
    "scenario.total_power": "P_t, transmit power budget (W)",
    "scenario.rate_threshold_bps": "eta_th, a number or one value per user",
    "scenario.constants.pathloss_los": "alpha_LoS",
    "scenario.constants.pathloss_nlos": "alpha_NLoS",
    "scenario.constants.env_b": "B in the LoS probability",
    "scenario.constants.env_c": "C in the LoS probability",
    "scenario.constants.noise_psd": "sigma^2, noise power per Hz (W/Hz)",
    "scenario.constants.mean_gain": "mu, mean small-scale fading gain",
    "scenario.constants.rice_k": "K, Rice factor of the LoS link",
    "channel.fading": '"expected" (mean gains) or "sampled" (per-episode draws)',
    "dqn.learning_rate": "bandwidth agent step size",
    "dqn.tau": "1.0 is a hard target update",
    "dqn.hidden": "hidden layer widths",
    "dqn.optimizer": '"adam" or "sgd"',
    "dqn.eps_fraction": "share of the step budget over which epsilon decays",
    "dqn.p_min": "lowest power drawn at episode reset (W)",
    "dqn.p_max": "highest reset power; 0 means total_power",
    "dqn.init_blocks_max": "random initial blocks up to this value; 0 means n_blocks",
    "dqn.power_decimals": "rounding of powers before inference and caching",
    "ddpg.actor_learning_rate": "policy step size",
    "ddpg.critic_learning_rate": "value step size",
    "ddpg.tau": "soft target update factor",
    "ddpg.max_steps": "T, steps per episode",
    "ddpg.delta_max": "largest per-step power change (W)",
    "ddpg.p_max": "per-user power cap; 0 means total_power",
    "ddpg.noise": '"gaussian" or "ou"',
    "ddpg.power_penalty": "reward penalty per watt over the budget",
    "experiment.seeds": "one training run per seed",
    "experiment.workers": "processes for sweeps and comparisons",
    "experiment.eval_episodes": "noise-free rollouts when solving",
    "experiment.sweep_axis": (
        '"threshold", "total_bandwidth", "height", "total_power", "fading" or "none"'
    ),
    "experiment.sweep_values": "points of the sweep axis",
    "experiment.fading_mean_gains": "mu values crossed with the fading sweep",
    "experiment.threshold_values": "eta_th values crossed with the total_power sweep",
    "experiment.convergence_max_std": (
        "largest trailing std of the DDPG per-step reward counted as settled"
    ),
    "experiment.full_scale": "50 users and 1000 blocks",
}

UAVALLOC_CONFIG = """\
# uavalloc configuration
# Values left out fall back to the built-in desk-scale defaults.
{% for section, values in tables %}

[{{ section }}]
{% for key, value in values %}
{{ key }} = {{ value | toml }}{% if notes.get(section ~ "." ~ key) %}  # {{ notes[section ~ "." ~ key] }}{% endif %}

{% endfor %}
{% endfor %}
"""  # noqa: E501


def toml_value(value: Any) -> str:
    """Render a scalar or list as a TOML literal."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(toml_value(v) for v in value) + "]"
    return str(value)


def _tables(
    mapping: Mapping[str, Any], prefix: str = ""
) -> list[tuple[str, list[tuple[str, Any]]]]:
    scalars = [(k, v) for k, v in mapping.items() if not isinstance(v, Mapping)]
    tables = [(prefix, scalars)] if prefix else []
    for key, value in mapping.items():
        if isinstance(value, Mapping):
            name = f"{prefix}.{key}" if prefix else key
            tables.extend(_tables(value, name))
    return tables


def render_config(values: Optional[Mapping[str, Any]] = None) -> str:
    """Render the annotated TOML configuration.

    Args:
        values: Nested configuration mapping, defaults to ``DEFAULTS``

    Returns:
        The TOML text
    """
    env = jinja2.Environment(
        loader=jinja2.BaseLoader(),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    env.filters["toml"] = toml_value
    template = env.from_string(UAVALLOC_CONFIG)
    return template.render(
        tables=_tables(values if values is not None else DEFAULTS), notes=KEY_NOTES
    )
