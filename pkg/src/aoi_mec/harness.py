"""Scenario generation, config files, parameter sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .model import DeviceProfile, Environment
from .orchestrator import POLICIES, MiscoConfig, run_policy, summarize

log = logging.getLogger(__name__)

AREA_SIDE = 50.0
MIN_SERVER_DISTANCE = 1.0  # far-field path loss is meaningless closer than this


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceDefaults:
    unit_sense_time: float = 0.2
    data_size: float = 4e6  # 500 KB with 1 KB = 1000 B
    cpu_cycles: float = 1e9
    sense_energy_per_bit: float = 1e-9
    tx_power: float = 0.1
    cpu_freq_low: float = 0.8e9
    cpu_freq_high: float = 1.0e9
    event_distance_max: float = 25.0


@dataclass
class ScenarioSpec:
    device_count: int = 20
    area_side: float = AREA_SIDE
    seed: int = 0
    env: dict = field(default_factory=dict)
    device: dict = field(default_factory=dict)
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)

    def __post_init__(self):
        if self.device_count < 1:
            raise ConfigError("scenario.device_count must be at least 1")
        if not self.area_side > 0:
            raise ConfigError("scenario.area_side must be positive")

    def at(self, axis: str, value) -> "ScenarioSpec":
        """Copy of this spec with one sweep parameter set."""
        spec = dataclasses.replace(self, env=dict(self.env), device=dict(self.device),
                                   sweep_axis=None, sweep_values=[])
        section, _, name = axis.rpartition(".")
        if axis in ("device_count", "scenario.device_count"):
            spec.device_count = int(value)
        elif axis in ("area_side", "scenario.area_side"):
            spec.area_side = float(value)
        elif section == "env" or (not section and name in _ENV_FIELDS):
            spec.env[name] = value
        elif section == "device" or (not section and name in _DEVICE_FIELDS):
            spec.device[name] = value
        else:
            raise ConfigError(f"unknown sweep axis {axis!r}")
        spec.__post_init__()
        return spec


_ENV_FIELDS = {f.name: f for f in dataclasses.fields(Environment)}
_DEVICE_FIELDS = {f.name: f for f in dataclasses.fields(DeviceDefaults)}


def _coerce(fields_map, section, overrides):
    out = {}
    for key, val in overrides.items():
        if key not in fields_map:
            raise ConfigError(f"unknown field {section}.{key}")
        typ = fields_map[key].type
        try:
            out[key] = str(val) if typ == "str" else float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{section}.{key}: cannot parse {val!r}") from None
    return out


def build_environment(overrides: dict) -> Environment:
    try:
        return Environment(**_coerce(_ENV_FIELDS, "env", overrides))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def generate_scenario(spec: ScenarioSpec) -> tuple[list[DeviceProfile], Environment]:
    """Random fleet in a square with the edge server at its center.

    Device ``i`` draws from its own stream keyed by ``(seed, i)``, so the
    first ``k`` devices are the same for every fleet size.
    """
    env = build_environment(spec.env)
    try:
        dd = DeviceDefaults(**_coerce(_DEVICE_FIELDS, "device", spec.device))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    if not 0 < dd.cpu_freq_low <= dd.cpu_freq_high:
        raise ConfigError("device.cpu_freq_low/high must satisfy 0 < low <= high")
    fleet = []
    half = spec.area_side / 2
    for i in range(spec.device_count):
        rng = np.random.default_rng([spec.seed, i])
        pos = rng.uniform(0.0, spec.area_side, size=2)
        dist = max(MIN_SERVER_DISTANCE, math.hypot(pos[0] - half, pos[1] - half))
        event = dd.event_distance_max * (1.0 - rng.random())  # (0, max]
        freq = rng.uniform(dd.cpu_freq_low, dd.cpu_freq_high)
        try:
            fleet.append(DeviceProfile(
                id=i, event_distance=event, unit_sense_time=dd.unit_sense_time,
                data_size=dd.data_size, cpu_cycles=dd.cpu_cycles,
                sense_energy_per_bit=dd.sense_energy_per_bit, tx_power=dd.tx_power,
                local_cpu_freq=freq, server_distance=dist))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return fleet, env


RESULT_FIELDS = ("scenario_id", "policy", "sweep_axis", "sweep_value", "replication", "seed",
                 "system_cost", "mean_aoi", "mean_energy", "sensing_share",
                 "processing_share", "offloaders", "inner_iterations", "outer_iterations",
                 "converged", "status")


@dataclass
class ResultRow:
    scenario_id: int
    policy: str
    sweep_axis: str
    sweep_value: object
    replication: int
    seed: int
    system_cost: float = math.nan
    mean_aoi: float = math.nan
    mean_energy: float = math.nan
    sensing_share: float = math.nan
    processing_share: float = math.nan
    offloaders: int = 0
    inner_iterations: int = 0
    outer_iterations: int = 0
    converged: bool = False
    status: str = "ok"

    @property
    def total_iterations(self) -> int:
        return self.inner_iterations + self.outer_iterations


def replication_seed(base_seed: int, replication: int) -> int:
    """Independent 63-bit seed for one replication; shared by every sweep point."""
    ss = np.random.SeedSequence([base_seed, replication])
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> 1)


def evaluate_point(spec: ScenarioSpec, policy: str, config: MiscoConfig, *,
                   scenario_id: int = 0, replication: int = 0, axis: str = "",
                   value: object = ""):
    """One policy on one replication; returns (row, fleet, env, report).

    A failed run yields a row whose status starts with ``error:`` and a
    ``None`` report. Config errors are not swallowed.
    """
    seed = replication_seed(spec.seed, replication)
    row = ResultRow(scenario_id, policy, axis, value, replication, seed)
    fleet, env = generate_scenario(dataclasses.replace(spec, seed=seed))
    try:
        report = run_policy(policy, fleet, env, dataclasses.replace(config, rng_seed=seed))
    except Exception as exc:  # one failed point must not stop a sweep
        log.warning("run failed: %s/%s rep %d: %s", policy, value, replication, exc)
        row.status = f"error: {type(exc).__name__}: {exc}".replace("\n", " ")
        return row, fleet, env, None
    m = summarize(fleet, report, env)
    row.system_cost = m["system_cost"]
    row.mean_aoi = m["mean_aoi"]
    row.mean_energy = m["mean_energy"]
    row.sensing_share = m["sensing_share"]
    row.processing_share = m["processing_share"]
    row.offloaders = m["offloaders"]
    row.inner_iterations = sum(report.inner_iterations)
    row.outer_iterations = report.outer_iterations
    row.converged = report.converged
    return row, fleet, env, report


def run_point(spec: ScenarioSpec, policy: str, config: MiscoConfig, **kw) -> ResultRow:
    return evaluate_point(spec, policy, config, **kw)[0]


def _point_job(args):
    return run_point(*args[:3], **args[3])


def run_sweep(spec: ScenarioSpec, policies: Sequence[str] = POLICIES, replications: int = 1,
              config: MiscoConfig | None = None, jobs: int = 1) -> list[ResultRow]:
    """Every (sweep value, policy, replication) combination, in that nesting order."""
    config = config or MiscoConfig()
    for p in policies:
        if p.upper() not in POLICIES:
            raise ConfigError(f"unknown policy {p!r}")
    axis = spec.sweep_axis or ""
    values = list(spec.sweep_values) if spec.sweep_axis else [""]
    tasks = []
    for k, v in enumerate(values):
        point = spec.at(axis, v) if axis else spec
        for p in policies:
            for rep in range(replications):
                tasks.append((point, p.upper(), config,
                              dict(scenario_id=k, replication=rep, axis=axis, value=v)))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map preserves submission order, so output order is independent of timing
            return list(pool.map(_point_job, tasks))
    return [_point_job(t) for t in tasks]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def write_results(rows: Iterable[ResultRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_FIELDS)
        for row in rows:
            w.writerow([_fmt(getattr(row, f)) for f in RESULT_FIELDS])
    return path


# --- config files ---------------------------------------------------------
#
# Flat ``section.key = value`` lines; ``#`` starts a comment. Sections:
#   scenario.{device_count, area_side, seed}
#   env.<Environment field>        device.<DeviceDefaults field>
#   sweep.{axis, values}           values is a comma-separated list
#   run.{policies, replications}   policies is a comma-separated list
#   misco.<MiscoConfig field>

_MISCO_FIELDS = {f.name: f for f in dataclasses.fields(MiscoConfig)}


@dataclass
class RunConfig:
    scenario: ScenarioSpec
    misco: MiscoConfig
    policies: list[str]
    replications: int


def _parse_scalar(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_config_text(text: str) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip().strip('"')
        if not sep or "." not in key or not val:
            raise ConfigError(f"line {n}: expected 'section.key = value', got {raw.strip()!r}")
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key}")
        out[key] = val
    return out


def load_config(source: str | Path | dict | None = None) -> RunConfig:
    """Build a RunConfig from a config file path, raw key map, or defaults."""
    if source is None:
        kv = {}
    elif isinstance(source, dict):
        kv = {k: str(v) for k, v in source.items()}
    else:
        try:
            kv = parse_config_text(Path(source).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    scen, env, dev, misco = {}, {}, {}, {}
    axis, values = None, []
    policies, reps = ["MISCO"], 1
    for key, val in kv.items():
        section, _, name = key.partition(".")
        if section == "scenario" and name in ("device_count", "seed"):
            scen[name] = int(_parse_scalar(val))
        elif section == "scenario" and name == "area_side":
            scen[name] = float(val)
        elif section == "env" and name in _ENV_FIELDS:
            env[name] = val
        elif section == "device" and name in _DEVICE_FIELDS:
            dev[name] = val
        elif section == "sweep" and name == "axis":
            axis = val
        elif section == "sweep" and name == "values":
            values = [_parse_scalar(v.strip()) for v in val.split(",") if v.strip()]
        elif section == "run" and name == "policies":
            policies = [p.strip().upper() for p in val.split(",") if p.strip()]
        elif section == "run" and name == "replications":
            reps = int(val)
        elif section == "misco" and name in _MISCO_FIELDS:
            parsed = _parse_scalar(val)
            misco[name] = parsed
        else:
            raise ConfigError(f"unknown config key {key!r}")
    for p in policies:
        if p not in POLICIES:
            raise ConfigError(f"run.policies: unknown policy {p!r}")
    if reps < 1:
        raise ConfigError("run.replications must be at least 1")
    if axis and not values:
        raise ConfigError("sweep.axis given without sweep.values")
    try:
        spec = ScenarioSpec(**scen, env=env, device=dev, sweep_axis=axis, sweep_values=values)
        if axis:
            spec.at(axis, values[0])
        build_environment(env)
        misco_cfg = MiscoConfig(**misco)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(spec, misco_cfg, policies, reps)
