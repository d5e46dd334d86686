"""Outer block-coordinate loop (sampling -> sensing -> offloading) and baselines."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .aoi import device_cost, fleet_costs, system_cost
from .game import admission_filter, run_best_response_dynamics
from .model import (DecisionState, DeviceProfile, Environment, device_gain,
                    multi_attempt_success_prob, pass_breakdown, sensing_success_prob)
from .stages import (InfeasibleError, device_min_attempts, max_attempts,
                     optimal_sampling_interval, optimize_sensing)

POLICIES = ("MISCO", "GSA", "ISA", "BRCO", "AECO")


@dataclass
class MiscoConfig:
    epsilon: float = 1e-4
    max_outer_iterations: int = 100
    rng_seed: int = 0
    strict_feasibility: bool = False
    # keep the previous offload profile when a fresh equilibrium costs more
    monotone_guard: bool = True
    max_game_slots: int | None = None
    brco_damping: float = 0.5
    brco_tolerance: float = 1e-4
    brco_max_rounds: int = 500

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_outer_iterations < 1:
            raise ValueError("max_outer_iterations must be at least 1")


@dataclass
class RunReport:
    policy: str
    decisions: DecisionState
    cost_trajectory: list[float]
    inner_iterations: list[int]
    converged: bool
    initial_cost: float = math.nan
    wall_clock: float = field(default=0.0, compare=False)
    guard_activations: int = 0

    @property
    def final_cost(self) -> float:
        return self.cost_trajectory[-1]

    @property
    def outer_iterations(self) -> int:
        return len(self.cost_trajectory)

    @property
    def total_iterations(self) -> int:
        return self.outer_iterations + sum(self.inner_iterations)

    @property
    def repaired(self) -> bool:
        return any(self.decisions.repaired)


def random_initial_state(fleet: Sequence[DeviceProfile], env: Environment,
                         rng: np.random.Generator) -> DecisionState:
    taus, ss = [], []
    for dev in fleet:
        tau = rng.uniform(env.tau_min, 4 * env.tau_min)
        tau = max(tau, dev.unit_sense_time)
        s = int(rng.integers(1, 6))
        ss.append(max(1, min(s, max_attempts(dev, tau))))
        taus.append(tau)
    x = [int(b) for b in rng.integers(0, 2, size=len(fleet))]
    return DecisionState(ss, taus, admission_filter(x, fleet, env))


def sampling_step(fleet, state: DecisionState, env: Environment,
                  respect_attempts: bool = True) -> None:
    """Closed-form interval per device with attempts and offload held fixed.

    With ``respect_attempts`` the interval is also kept at or above
    ``s * t_unit`` so the current attempt count stays feasible.
    """
    for i, dev in enumerate(fleet):
        s = state.sensing_attempts[i]
        lower = s * dev.unit_sense_time if respect_attempts else None
        state.sampling_interval[i] = optimal_sampling_interval(
            i, s, state.offload, fleet, env, lower=lower).value


def sensing_step(fleet, state: DecisionState, env: Environment, strict: bool) -> None:
    for i in range(len(fleet)):
        res = optimize_sensing(i, state.sampling_interval[i], state.offload, fleet, env,
                               strict=strict)
        state.sensing_attempts[i] = int(res.value)
        state.sampling_interval[i] = res.sampling_interval
        state.repaired[i] = res.feasibility_repair_applied


def minimum_attempts_step(fleet, state: DecisionState, env: Environment,
                          strict: bool) -> None:
    """Fewest attempts meeting p_min; stretch the interval if they do not fit."""
    for i, dev in enumerate(fleet):
        s = device_min_attempts(dev, env)
        tau = state.sampling_interval[i]
        repaired = False
        if s > max_attempts(dev, tau):
            if strict:
                raise InfeasibleError(f"device {dev.id}: p_min needs {s} attempts")
            tau, repaired = s * dev.unit_sense_time, True
        state.sensing_attempts[i] = s
        state.sampling_interval[i] = tau
        state.repaired[i] = repaired


def offloading_step(fleet, state: DecisionState, env: Environment,
                    config: MiscoConfig) -> int:
    res = run_best_response_dynamics(fleet, state.sensing_attempts, state.sampling_interval,
                                     env, max_slots=config.max_game_slots)
    state.offload = res.offload
    return res.slots


def _converged(traj: list[float], prev: float, eps: float) -> bool:
    return abs(traj[-1] - prev) < eps


def _device_feasible(dev, s: int, tau: float, env: Environment) -> bool:
    return (1 <= s <= max_attempts(dev, tau) and tau >= env.tau_min
            and multi_attempt_success_prob(sensing_success_prob(dev, env), s) >= env.p_min)


def interval_and_attempts_step(fleet, state: DecisionState, env: Environment,
                               strict: bool) -> None:
    """Sampling update then sensing update, with the offload profile frozen.

    A device whose previous (interval, attempts) pair was feasible and
    strictly cheaper keeps it, so the step never raises any device's cost.
    """
    prev = state.copy()
    sampling_step(fleet, state, env, respect_attempts=False)
    sensing_step(fleet, state, env, strict)
    for i, dev in enumerate(fleet):
        s0, tau0 = prev.sensing_attempts[i], prev.sampling_interval[i]
        if not _device_feasible(dev, s0, tau0, env):
            continue
        old = device_cost(i, s0, tau0, state.offload, fleet, env).weighted_cost
        new = device_cost(i, state.sensing_attempts[i], state.sampling_interval[i],
                          state.offload, fleet, env).weighted_cost
        if old < new:
            state.sensing_attempts[i] = s0
            state.sampling_interval[i] = tau0
            state.repaired[i] = prev.repaired[i]


def run_misco(fleet: Sequence[DeviceProfile], env: Environment,
              config: MiscoConfig | None = None) -> RunReport:
    """Alternate sampling, sensing and offloading updates until the cost settles."""
    config = config or MiscoConfig()
    if not fleet:
        raise ValueError("fleet must not be empty")
    t0 = time.perf_counter()
    rng = np.random.default_rng(config.rng_seed)
    state = random_initial_state(fleet, env, rng)
    prev = system_cost(fleet, state, env)
    initial = prev
    traj, inner = [], []
    guards = 0
    converged = False
    for r in range(config.max_outer_iterations):
        interval_and_attempts_step(fleet, state, env, config.strict_feasibility)
        kept = list(state.offload)
        before = system_cost(fleet, state, env)
        inner.append(offloading_step(fleet, state, env, config))
        cost = system_cost(fleet, state, env)
        if config.monotone_guard and r > 0 and cost > before:
            state.offload = kept
            cost = before
            guards += 1
        traj.append(cost)
        if _converged(traj, prev, config.epsilon):
            converged = True
            break
        prev = cost
    return RunReport("MISCO", state, traj, inner, converged, initial,
                     time.perf_counter() - t0, guards)


def _settle_interval_and_attempts(fleet, state: DecisionState, env: Environment,
                                  config: MiscoConfig) -> None:
    """Alternate the sampling and sensing updates with the offload profile frozen."""
    prev = system_cost(fleet, state, env)
    for _ in range(config.max_outer_iterations):
        interval_and_attempts_step(fleet, state, env, config.strict_feasibility)
        cost = system_cost(fleet, state, env)
        if abs(cost - prev) < config.epsilon:
            return
        prev = cost


def _fresh_state(fleet, env: Environment) -> DecisionState:
    n = len(fleet)
    return DecisionState([1] * n, [max(env.tau_min, d.unit_sense_time) for d in fleet],
                         [0] * n)


def _one_pass_report(kind, fleet, state, env, inner, t0) -> RunReport:
    cost = system_cost(fleet, state, env)
    return RunReport(kind, state, [cost], inner, True, math.nan, time.perf_counter() - t0)


def probabilistic_offloading(fleet, state: DecisionState, env: Environment,
                             config: MiscoConfig) -> tuple[list[int], int]:
    """Damped best responses on offload probabilities against expected interference."""
    n = len(fleet)
    w = np.array([device_gain(d, env) * d.tx_power for d in fleet])
    q = np.full(n, 0.5)
    rounds = 0
    for rounds in range(1, config.brco_max_rounds + 1):
        expected = float(np.dot(q, w))
        target = np.empty(n)
        for i, dev in enumerate(fleet):
            interf = expected - q[i] * w[i]
            target[i] = float(_expected_offload_cost(i, interf, state, fleet, env)
                              < _local_cost(i, state, fleet, env))
        new = (1 - config.brco_damping) * q + config.brco_damping * target
        done = np.max(np.abs(new - q)) < config.brco_tolerance
        q = new
        if done:
            break
    x = [int(v > 0.5) for v in q]
    return admission_filter(x, fleet, env), rounds


def _local_cost(i, state, fleet, env) -> float:
    x = list(state.offload)
    x[i] = 0
    return device_cost(i, state.sensing_attempts[i], state.sampling_interval[i], x,
                       fleet, env).weighted_cost


def _expected_offload_cost(i, interf, state, fleet, env) -> float:
    dev = fleet[i]
    s, tau = state.sensing_attempts[i], state.sampling_interval[i]
    rate = env.bandwidth * math.log2(1 + device_gain(dev, env) * dev.tx_power
                                     / (env.noise_power + interf))
    t_tr = dev.data_size / rate
    pb = pass_breakdown(i, s, [0] * len(fleet), fleet, env)
    p = multi_attempt_success_prob(sensing_success_prob(dev, env), s)
    t1 = pb.sense_time + t_tr + dev.cpu_cycles / env.edge_cpu_freq
    e1 = pb.sense_energy + dev.tx_power * t_tr
    return env.weight_aoi * (tau / 2 + t1 / p) + env.weight_energy * e1 / tau


def _zero_wait_intervals(fleet, state: DecisionState, env: Environment) -> None:
    for i, dev in enumerate(fleet):
        c = device_cost(i, state.sensing_attempts[i], state.sampling_interval[i],
                        state.offload, fleet, env)
        busy = c.passes.time / c.success_prob
        state.sampling_interval[i] = max(env.tau_min, busy,
                                         state.sensing_attempts[i] * dev.unit_sense_time)


def run_isa(fleet, env, config: MiscoConfig) -> RunReport:
    t0 = time.perf_counter()
    state = _fresh_state(fleet, env)
    prev = system_cost(fleet, state, env)
    traj, inner = [], []
    converged = False
    for r in range(config.max_outer_iterations):
        cand = state.copy()
        _zero_wait_intervals(fleet, cand, env)
        sensing_step(fleet, cand, env, config.strict_feasibility)
        slots = offloading_step(fleet, cand, env, config)
        cost = system_cost(fleet, cand, env)
        if r > 0 and cost > prev:
            # the zero-wait rule is not a descent step; stop at the last good iterate
            converged = True
            break
        state = cand
        inner.append(slots)
        traj.append(cost)
        if _converged(traj, prev, config.epsilon):
            converged = True
            break
        prev = cost
    return RunReport("ISA", state, traj, inner, converged, math.nan,
                     time.perf_counter() - t0)


def run_baseline(kind: str, fleet: Sequence[DeviceProfile], env: Environment,
                 config: MiscoConfig | None = None) -> RunReport:
    """Comparison policies; each differs from the full loop in one stage."""
    config = config or MiscoConfig()
    if not fleet:
        raise ValueError("fleet must not be empty")
    kind = kind.upper()
    t0 = time.perf_counter()
    if kind == "MISCO":
        return run_misco(fleet, env, config)
    if kind == "ISA":
        return run_isa(fleet, env, config)
    state = _fresh_state(fleet, env)
    if kind == "GSA":
        minimum_attempts_step(fleet, state, env, config.strict_feasibility)
        sampling_step(fleet, state, env)
        slots = offloading_step(fleet, state, env, config)
        return _one_pass_report(kind, fleet, state, env, [slots], t0)
    if kind == "BRCO":
        _settle_interval_and_attempts(fleet, state, env, config)
        state.offload, rounds = probabilistic_offloading(fleet, state, env, config)
        return _one_pass_report(kind, fleet, state, env, [rounds], t0)
    if kind == "AECO":
        state.offload = admission_filter([1] * len(fleet), fleet, env)
        _settle_interval_and_attempts(fleet, state, env, config)
        return _one_pass_report(kind, fleet, state, env, [0], t0)
    raise ValueError(f"unknown policy {kind!r}; expected one of {POLICIES}")


def run_policy(kind: str, fleet, env, config: MiscoConfig | None = None) -> RunReport:
    return run_baseline(kind, fleet, env, config)


def check_constraints(fleet: Sequence[DeviceProfile], decisions: DecisionState,
                      env: Environment) -> list[str]:
    """Human-readable list of violated constraints; empty when feasible."""
    bad = []
    load = 0.0
    for i, dev in enumerate(fleet):
        s, tau, x = (decisions.sensing_attempts[i], decisions.sampling_interval[i],
                     decisions.offload[i])
        if not 1 <= s <= max_attempts(dev, tau):
            bad.append(f"device {dev.id}: attempts {s} outside [1, floor(tau/t_unit)]")
        if x not in (0, 1):
            bad.append(f"device {dev.id}: offload bit {x!r} not binary")
        if tau < env.tau_min * (1 - 1e-12):
            bad.append(f"device {dev.id}: interval {tau} below tau_min")
        if multi_attempt_success_prob(sensing_success_prob(dev, env), s) < env.p_min:
            bad.append(f"device {dev.id}: sensing success below p_min")
        load += x * dev.data_size
    if load > env.edge_data_threshold:
        bad.append(f"edge load {load} exceeds {env.edge_data_threshold}")
    return bad


def summarize(fleet, report: RunReport, env: Environment) -> dict:
    """Fleet means of the AoI, energy and time-share metrics for one run."""
    costs = fleet_costs(fleet, report.decisions, env)
    n = len(costs)
    sense = sum(c.sense_share for c in costs) / n
    return {
        "system_cost": report.final_cost,
        "mean_aoi": sum(c.avg_aoi for c in costs) / n,
        "mean_energy": sum(c.avg_energy for c in costs) / n,
        "sensing_share": sense,
        "processing_share": 1 - sense,
        "offloaders": sum(report.decisions.offload),
    }
