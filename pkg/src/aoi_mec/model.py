"""Static parameters and per-device time/energy formulas.

All quantities are SI: seconds, joules, watts, hertz, bits, meters.
Functions here are pure; offload vectors are sequences of 0/1 (or bools)
indexed by fleet position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

DELTA_CONVENTIONS = ("ghz", "hz", "constant")


@dataclass(frozen=True)
class DeviceProfile:
    id: int
    event_distance: float  # m
    unit_sense_time: float  # s per sensing attempt
    data_size: float  # bits
    cpu_cycles: float  # cycles per update
    sense_energy_per_bit: float  # J/bit
    tx_power: float  # W
    local_cpu_freq: float  # Hz
    server_distance: float  # m

    def __post_init__(self):
        for name in ("unit_sense_time", "data_size", "cpu_cycles",
                     "sense_energy_per_bit", "tx_power", "local_cpu_freq",
                     "server_distance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"DeviceProfile.{name} must be positive")
        if self.event_distance < 0:
            raise ValueError("DeviceProfile.event_distance must be nonnegative")


@dataclass(frozen=True)
class Environment:
    bandwidth: float = 1e8
    noise_power: float = 1e-13
    sensing_quality: float = 0.08
    edge_cpu_freq: float = 2e10
    local_energy_per_cycle_coeff: float = 1e-11
    delta_convention: str = "ghz"
    edge_data_threshold: float = 4e7
    p_min: float = 0.7
    tau_min: float = 0.5
    weight_aoi: float = 0.5
    weight_energy: float = 0.5
    path_loss_exponent: float = 4.0
    tau_max: float = 1e3  # returned when weight_aoi == 0

    def __post_init__(self):
        if not 0 < self.p_min < 1:
            raise ValueError("Environment.p_min must lie in (0, 1)")
        if self.weight_aoi < 0 or self.weight_energy < 0:
            raise ValueError("Environment weights must be nonnegative")
        if not self.weight_aoi + self.weight_energy > 0:
            raise ValueError("Environment weights must not both be zero")
        for name in ("bandwidth", "noise_power", "sensing_quality",
                     "edge_cpu_freq", "local_energy_per_cycle_coeff",
                     "tau_min", "path_loss_exponent", "tau_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"Environment.{name} must be positive")
        if self.edge_data_threshold < 0:
            raise ValueError("Environment.edge_data_threshold must be nonnegative")
        if self.delta_convention not in DELTA_CONVENTIONS:
            raise ValueError(
                f"Environment.delta_convention must be one of {DELTA_CONVENTIONS}")

    def with_overrides(self, **kw) -> "Environment":
        return replace(self, **kw)


@dataclass
class DecisionState:
    """Per-device optimization variables: attempts s, interval tau, offload x."""

    sensing_attempts: list[int]
    sampling_interval: list[float]
    offload: list[int]
    repaired: list[bool] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.sensing_attempts)
        if len(self.sampling_interval) != n or len(self.offload) != n:
            raise ValueError("DecisionState vectors must have equal length")
        if not self.repaired:
            self.repaired = [False] * n

    def copy(self) -> "DecisionState":
        return DecisionState(list(self.sensing_attempts), list(self.sampling_interval),
                             list(self.offload), list(self.repaired))


def channel_gain(server_distance: float, path_loss_exponent: float) -> float:
    if server_distance <= 0:
        raise ValueError("server distance must be positive")
    return server_distance ** (-path_loss_exponent)


def device_gain(device: DeviceProfile, env: Environment) -> float:
    return channel_gain(device.server_distance, env.path_loss_exponent)


def sensing_success_prob(device: DeviceProfile, env: Environment) -> float:
    return math.exp(-env.sensing_quality * device.event_distance)


def multi_attempt_success_prob(rho: float, s: int) -> float:
    if s < 1:
        raise ValueError("at least one sensing attempt is required")
    if not 0 < rho <= 1:
        raise ValueError("single-attempt success probability must lie in (0, 1]")
    return 1.0 - (1.0 - rho) ** s


def sensing_cost(device: DeviceProfile, s: int) -> tuple[float, float]:
    """Time and energy of ``s`` consecutive sensing attempts."""
    if s < 1:
        raise ValueError("at least one sensing attempt is required")
    return device.unit_sense_time * s, device.sense_energy_per_bit * device.data_size * s


def interference_power(index: int, offload: Sequence[int],
                       fleet: Sequence[DeviceProfile], env: Environment) -> float:
    """Received power from every other offloading device."""
    total = 0.0
    for m, (dev, x) in enumerate(zip(fleet, offload)):
        if m != index and x:
            total += device_gain(dev, env) * dev.tx_power
    return total


def transmission_rate(index: int, offload: Sequence[int],
                      fleet: Sequence[DeviceProfile], env: Environment) -> float:
    """Shannon rate device ``index`` gets (or would get) when offloading.

    Only the other devices' bits in ``offload`` matter; the device's own bit
    is ignored so the same call serves hypothetical best-response checks.
    """
    dev = fleet[index]
    signal = device_gain(dev, env) * dev.tx_power
    sinr = signal / (env.noise_power + interference_power(index, offload, fleet, env))
    return env.bandwidth * math.log2(1.0 + sinr)


def transmission_cost(device: DeviceProfile, rate: float) -> tuple[float, float]:
    if rate <= 0:
        return math.inf, math.inf
    t = device.data_size / rate
    return t, device.tx_power * t


def energy_per_cycle(device: DeviceProfile, env: Environment) -> float:
    coeff = env.local_energy_per_cycle_coeff
    if env.delta_convention == "ghz":
        return coeff * (device.local_cpu_freq / 1e9) ** 2
    if env.delta_convention == "hz":
        return coeff * device.local_cpu_freq ** 2
    return coeff


def computation_cost(device: DeviceProfile, env: Environment,
                     offloaded: bool) -> tuple[float, float]:
    """Processing time and device-side energy for local or edge execution."""
    if offloaded:
        return device.cpu_cycles / env.edge_cpu_freq, 0.0
    return (device.cpu_cycles / device.local_cpu_freq,
            device.cpu_cycles * energy_per_cycle(device, env))


@dataclass(frozen=True)
class PassBreakdown:
    """Time and energy of one sensing-plus-processing pass."""

    sense_time: float
    trans_time: float
    comp_time: float
    sense_energy: float
    trans_energy: float
    comp_energy: float

    @property
    def time(self) -> float:
        return self.sense_time + self.trans_time + self.comp_time

    @property
    def energy(self) -> float:
        return self.sense_energy + self.trans_energy + self.comp_energy


def pass_breakdown(index: int, s: int, offload: Sequence[int],
                   fleet: Sequence[DeviceProfile], env: Environment) -> PassBreakdown:
    dev = fleet[index]
    t_ses, e_ses = sensing_cost(dev, s)
    if offload[index]:
        t_tr, e_tr = transmission_cost(dev, transmission_rate(index, offload, fleet, env))
        t_c, e_c = computation_cost(dev, env, True)
    else:
        t_tr = e_tr = 0.0
        t_c, e_c = computation_cost(dev, env, False)
    return PassBreakdown(t_ses, t_tr, t_c, e_ses, e_tr, e_c)


def single_pass_time(index: int, s: int, offload: Sequence[int],
                     fleet: Sequence[DeviceProfile], env: Environment) -> float:
    return pass_breakdown(index, s, offload, fleet, env).time
