"""Python front end of the memsim simulator.

Configs travel as JSON strings or dicts; results come back as plain dicts.
"""
import json as _json

from . import _memsim
from ._memsim import (
    CSV_HEADER,
    ConfigError,
    SimulationError,
    WorkloadError,
    bank_index,
    channel_index,
    coalesce,
    derive_output_ports,
    workloads,
)

__all__ = [
    "CSV_HEADER",
    "ConfigError",
    "SimulationError",
    "WorkloadError",
    "bank_index",
    "channel_index",
    "coalesce",
    "default_config",
    "derive_output_ports",
    "run",
    "sweep",
    "validate",
    "workloads",
]


def _as_json(config):
    if config is None or isinstance(config, str):
        return config
    return _json.dumps(config)


def default_config():
    return _json.loads(_memsim.default_config())


def validate(config=None):
    shapes = _memsim.validate(_as_json(config))
    shapes["config"] = _json.loads(shapes["config"])
    return shapes


def run(workload, config=None, seed=None, cycle_cap=None):
    return _memsim.run(workload, _as_json(config), seed, cycle_cap)


def sweep(parameter, values, config=None, workloads=None, jobs=1):
    return _memsim.sweep(parameter, [str(v) for v in values], _as_json(config), workloads, jobs)
