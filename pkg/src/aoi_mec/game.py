"""Binary offloading game among devices sharing one uplink and one edge server.

Each device picks local (0) or edge (1) execution. Offloading devices
interfere with each other, and the edge server accepts at most
``env.edge_data_threshold`` bits at once. A device whose request does not fit
is refused and processes locally, so an admitted profile never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .aoi import device_cost
from .model import (DeviceProfile, Environment, computation_cost, device_gain,
                    energy_per_cycle, interference_power, multi_attempt_success_prob,
                    sensing_success_prob)

NASH_SLACK = 1e-12


class GameNonConvergence(RuntimeError):
    def __init__(self, msg, trace):
        super().__init__(msg)
        self.trace = trace


def interference_at(index: int, offload: Sequence[int], fleet: Sequence[DeviceProfile],
                    env: Environment) -> float:
    return interference_power(index, offload, fleet, env)


def offload_threshold(index: int, s: int, tau: float, fleet: Sequence[DeviceProfile],
                      env: Environment) -> float | None:
    """Largest received interference at which offloading still pays off.

    Returns None when offloading cannot beat local execution at any
    interference level (no latency or energy advantage).
    """
    dev = fleet[index]
    p = multi_attempt_success_prob(sensing_success_prob(dev, env), s)
    t_local, e_local = computation_cost(dev, env, False)
    t_edge, _ = computation_cost(dev, env, True)
    mu_t, mu_e = env.weight_aoi, env.weight_energy
    denom = mu_t * tau * (t_local - t_edge) + mu_e * p * e_local
    if denom <= 0:
        return None
    expo = (mu_t * dev.data_size * tau + mu_e * dev.tx_power * dev.data_size * p) / (
        env.bandwidth * denom)
    grow = math.expm1(expo * math.log(2)) if expo < 1000 else math.inf
    return device_gain(dev, env) * dev.tx_power / grow - env.noise_power


def fits_capacity(index: int, offload: Sequence[int], fleet: Sequence[DeviceProfile],
                  env: Environment) -> bool:
    """Would the server accept ``index`` on top of the others currently served?"""
    load = sum(d.data_size for m, (d, x) in enumerate(zip(fleet, offload)) if x and m != index)
    return load + fleet[index].data_size <= env.edge_data_threshold


def _with_bit(offload: Sequence[int], index: int, bit: int) -> list[int]:
    out = list(offload)
    out[index] = bit
    return out


def option_costs(index: int, offload: Sequence[int], s: int, tau: float,
                 fleet: Sequence[DeviceProfile], env: Environment) -> tuple[float, float]:
    """(local cost, offload cost) for one device with the others held fixed."""
    c0 = device_cost(index, s, tau, _with_bit(offload, index, 0), fleet, env).weighted_cost
    c1 = device_cost(index, s, tau, _with_bit(offload, index, 1), fleet, env).weighted_cost
    return c0, c1


def best_response(index: int, offload: Sequence[int], sensing_attempts: Sequence[int],
                  sampling_interval: Sequence[float], fleet: Sequence[DeviceProfile],
                  env: Environment, method: str = "direct",
                  threshold: float | None = None) -> int:
    """Best offload bit for ``index`` given everyone else's bits.

    ``method="direct"`` compares the two costs (ties go local);
    ``method="threshold"`` tests received interference against the
    closed-form threshold. A refused request always means local.
    """
    if not fits_capacity(index, offload, fleet, env):
        return 0
    s, tau = sensing_attempts[index], sampling_interval[index]
    if method == "threshold":
        if threshold is None:
            threshold = offload_threshold(index, s, tau, fleet, env)
        if threshold is None:
            return 0
        return int(interference_at(index, offload, fleet, env) <= threshold)
    c0, c1 = option_costs(index, offload, s, tau, fleet, env)
    return int(c1 < c0)


def admission_filter(offload: Sequence[int], fleet: Sequence[DeviceProfile],
                     env: Environment) -> list[int]:
    """Evict the largest served task (ties: largest id) until the load fits."""
    out = [int(bool(x)) for x in offload]
    served = [m for m, x in enumerate(out) if x]
    # summed afresh each round so float residue cannot outlive the last eviction
    while served and sum(fleet[m].data_size for m in served) > env.edge_data_threshold:
        victim = max(served, key=lambda m: (fleet[m].data_size, fleet[m].id))
        out[victim] = 0
        served.remove(victim)
    return out


def potential_thresholds(sensing_attempts, sampling_interval, fleet, env) -> list[float]:
    """Per-device thresholds as used by the potential; undefined maps to -noise."""
    out = []
    for i in range(len(fleet)):
        L = offload_threshold(i, sensing_attempts[i], sampling_interval[i], fleet, env)
        out.append(-env.noise_power if L is None else L)
    return out


def potential(offload: Sequence[int], fleet: Sequence[DeviceProfile],
              thresholds: Sequence[float], env: Environment) -> float:
    w = np.array([device_gain(d, env) * d.tx_power for d in fleet])
    x = np.asarray(offload, dtype=float)
    wx = w * x
    pair = 0.5 * (wx.sum() ** 2 - np.dot(wx, wx))
    return float(pair + np.dot(w * np.asarray(thresholds, dtype=float), 1 - x))


@dataclass
class SlotRecord:
    slot: int
    updater: int
    delta_cost: float
    potential_before: float
    potential_after: float
    bitmask: int


@dataclass
class GameResult:
    offload: list[int]
    slots: int
    trace: list[SlotRecord] = field(default_factory=list)

    @property
    def updates(self) -> int:
        return len(self.trace)

    def trace_rows(self):
        header = ["slot", "updater", "delta_cost", "potential_before",
                  "potential_after", "bitmask"]
        rows = [[r.slot, r.updater, f"{r.delta_cost:.9g}", f"{r.potential_before:.9g}",
                 f"{r.potential_after:.9g}", r.bitmask] for r in self.trace]
        return header, rows


def _bitmask(offload) -> int:
    return sum(1 << i for i, x in enumerate(offload) if x)


def run_best_response_dynamics(fleet: Sequence[DeviceProfile],
                               sensing_attempts: Sequence[int],
                               sampling_interval: Sequence[float], env: Environment,
                               initial: Sequence[int] | None = None,
                               max_slots: int | None = None,
                               method: str = "direct") -> GameResult:
    """One-update-per-slot best-response dynamics from all-local.

    In every slot the current profile is passed through the admission
    filter, each device computes its best response, and among the devices
    that want to switch the one with the largest cost reduction (ties:
    lowest index) switches. Stops at the first slot where nobody wants to
    switch, which is a Nash equilibrium of the admitted game.
    """
    n = len(fleet)
    x = [0] * n if initial is None else [int(bool(b)) for b in initial]
    if max_slots is None:
        max_slots = 10 * n + 10
    thresholds = potential_thresholds(sensing_attempts, sampling_interval, fleet, env)
    trace: list[SlotRecord] = []
    for slot in range(1, max_slots + 1):
        x = admission_filter(x, fleet, env)
        best = None
        for i in range(n):
            br = best_response(i, x, sensing_attempts, sampling_interval, fleet, env,
                               method=method, threshold=thresholds[i])
            if br == x[i]:
                continue
            c0, c1 = option_costs(i, x, sensing_attempts[i], sampling_interval[i], fleet, env)
            delta = (c1 - c0) if br else (c0 - c1)
            if best is None or delta < best[1]:
                best = (i, delta, br)
        if best is None:
            return GameResult(x, slot, trace)
        i, delta, br = best
        phi0 = potential(x, fleet, thresholds, env)
        x[i] = br
        trace.append(SlotRecord(slot, i, delta, phi0, potential(x, fleet, thresholds, env),
                                _bitmask(x)))
    raise GameNonConvergence(f"no equilibrium within {max_slots} slots", trace)


@dataclass
class OracleResult:
    optimum: tuple[int, ...]
    optimum_cost: float
    nash: list[tuple[int, ...]]
    nash_costs: list[float]

    def contains(self, offload) -> bool:
        return tuple(int(b) for b in offload) in self.nash

    def price_of_anarchy(self) -> float:
        return max(self.nash_costs) / self.optimum_cost


def _cost_table(fleet, sensing_attempts, sampling_interval, env, X):
    """Per-device weighted cost for every profile row of X, via numpy."""
    d = np.array([f.data_size for f in fleet])
    w = np.array([device_gain(f, env) * f.tx_power for f in fleet])
    s = np.asarray(sensing_attempts, dtype=float)
    tau = np.asarray(sampling_interval, dtype=float)
    rho = np.array([sensing_success_prob(f, env) for f in fleet])
    P = 1 - (1 - rho) ** s
    t_unit = np.array([f.unit_sense_time for f in fleet])
    e_sense = np.array([f.sense_energy_per_bit * f.data_size for f in fleet]) * s
    t_loc = np.array([f.cpu_cycles / f.local_cpu_freq for f in fleet])
    e_loc = np.array([f.cpu_cycles * energy_per_cycle(f, env) for f in fleet])
    t_edge = np.array([f.cpu_cycles for f in fleet]) / env.edge_cpu_freq
    p_tx = np.array([f.tx_power for f in fleet])

    interf = (X @ w)[:, None] - X * w
    rate = env.bandwidth * np.log2(1 + w / (env.noise_power + interf))
    t_tr = d / rate
    t1 = t_unit * s + X * (t_tr + t_edge) + (1 - X) * t_loc
    e1 = e_sense + X * p_tx * t_tr + (1 - X) * e_loc
    return env.weight_aoi * (tau / 2 + t1 / P) + env.weight_energy * e1 / tau


def exhaustive_offload_oracle(fleet: Sequence[DeviceProfile], sensing_attempts,
                              sampling_interval, env: Environment) -> OracleResult:
    """Enumerate every admissible profile; return the cost minimizer and all equilibria."""
    n = len(fleet)
    if n > 16:
        raise ValueError("exhaustive enumeration is limited to 16 devices")
    codes = np.arange(1 << n)
    X = ((codes[:, None] >> np.arange(n)) & 1).astype(float)
    d = np.array([f.data_size for f in fleet])
    admissible = X @ d <= env.edge_data_threshold
    C = _cost_table(fleet, sensing_attempts, sampling_interval, env, X)
    total = C.sum(axis=1)
    total_adm = np.where(admissible, total, np.inf)
    opt = int(np.argmin(total_adm))

    stable = admissible.copy()
    for i in range(n):
        flip = codes ^ (1 << i)
        # a switch to edge is only available if the server accepts it
        available = admissible[flip]
        own, dev = C[:, i], C[flip, i]
        gains = available & (dev < own - NASH_SLACK * np.maximum(1.0, np.abs(own)))
        stable &= ~gains
    nash_codes = np.flatnonzero(stable)
    nash = [tuple(int(b) for b in X[c]) for c in nash_codes]
    return OracleResult(tuple(int(b) for b in X[opt]), float(total[opt]), nash,
                        [float(total[c]) for c in nash_codes])
