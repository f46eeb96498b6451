"""System model: scenario geometry and the air-to-ground channel."""

from uavalloc.model.channel import (
    FadingMode,
    LinkState,
    effective_snr,
    expected_rates,
    is_served,
    link_state,
    link_states,
    los_probability,
    minimal_blocks,
    rate_bps,
    sample_gain_los,
    sample_gain_nlos,
    snr_components,
    user_rates,
)
from uavalloc.model.scenario import (
    Budgets,
    EnvConstants,
    GroundUser,
    Scenario,
    build_scenario,
    generate_users,
    geometry_arrays,
    sample_disk_points,
    user_geometry,
)
