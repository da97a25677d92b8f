"""Python bindings for the accelerator runtime."""

from ._arax import (
    AraxError,
    Buffer,
    Handle,
    Queue,
    Runtime,
    Session,
    pack_i64,
    parse_api,
    run_workload,
    scenario,
    scenario_names,
)

__all__ = [
    "AraxError",
    "Buffer",
    "Handle",
    "Queue",
    "Runtime",
    "Session",
    "pack_i64",
    "parse_api",
    "run_workload",
    "scenario",
    "scenario_names",
]
