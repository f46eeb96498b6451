"""Experiment harness, artifact writers and the optional renderer."""

from uavalloc.experiments.artifacts import (
    build_manifest,
    read_csv,
    read_manifest,
    write_allocation_csv,
    write_csv,
)
from uavalloc.experiments.harness import (
    ComparisonReport,
    SweepReport,
    run_comparison,
    run_eval,
    run_oracle,
    run_sweep,
    run_training,
)
from uavalloc.experiments.render import render_csv
