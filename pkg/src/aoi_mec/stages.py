"""Per-device stage solvers: sampling interval and number of sensing attempts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .aoi import device_cost
from .model import (DeviceProfile, Environment, multi_attempt_success_prob,
                    pass_breakdown, sensing_success_prob)

# floor(tau / t_unit) must survive tau = s * t_unit round trips
_FLOOR_EPS = 1e-9


class InfeasibleError(ValueError):
    """No sensing count satisfies the attempt bounds for the given interval."""


@dataclass(frozen=True)
class StageResult:
    value: float
    cost_at_optimum: float
    feasibility_repair_applied: bool = False
    sampling_interval: float | None = None  # interval the value is valid for
    unbounded: bool = False


def max_attempts(device: DeviceProfile, tau: float) -> int:
    return int(math.floor(tau / device.unit_sense_time + _FLOOR_EPS))


def pass_energy(index: int, s: int, offload: Sequence[int],
                fleet: Sequence[DeviceProfile], env: Environment) -> float:
    return pass_breakdown(index, s, offload, fleet, env).energy


def sampling_objective(tau: float, e_total: float, env: Environment) -> float:
    """tau-dependent part of a device's cost: mu_t*tau/2 + mu_e*E/tau."""
    return env.weight_aoi * tau / 2 + env.weight_energy * e_total / tau


def optimal_sampling_interval(index: int, s: int, offload: Sequence[int],
                              fleet: Sequence[DeviceProfile], env: Environment,
                              lower: float | None = None) -> StageResult:
    """Closed-form minimizer of the sampling objective, clamped below.

    ``lower`` defaults to ``env.tau_min``; callers holding ``s`` fixed may
    pass ``max(tau_min, s * t_unit)`` so the attempt bound stays satisfied.
    """
    lo = env.tau_min if lower is None else max(env.tau_min, lower)
    e_total = pass_energy(index, s, offload, fleet, env)
    if env.weight_aoi == 0:
        tau = max(lo, env.tau_max)
        return StageResult(tau, device_cost(index, s, tau, offload, fleet, env).weighted_cost,
                           sampling_interval=tau, unbounded=True)
    tau = max(lo, math.sqrt(2 * env.weight_energy * e_total / env.weight_aoi))
    return StageResult(tau, device_cost(index, s, tau, offload, fleet, env).weighted_cost,
                       sampling_interval=tau)


def min_attempts_for_pmin(rho: float, p_min: float) -> int:
    if not 0 < p_min < 1:
        raise ValueError("p_min must lie in (0, 1)")
    if rho >= 1:
        return 1
    s = max(1, math.ceil(math.log1p(-p_min) / math.log1p(-rho)))
    # the log ratio can land one ulp off an exact boundary
    while s > 1 and multi_attempt_success_prob(rho, s - 1) >= p_min:
        s -= 1
    while multi_attempt_success_prob(rho, s) < p_min:
        s += 1
    return s


def device_min_attempts(device: DeviceProfile, env: Environment) -> int:
    return min_attempts_for_pmin(sensing_success_prob(device, env), env.p_min)


def optimize_sensing(index: int, tau: float, offload: Sequence[int],
                     fleet: Sequence[DeviceProfile], env: Environment,
                     strict: bool = False) -> StageResult:
    """Early-stopping enumeration of sensing attempts from s = 1.

    Stops at the first s whose successor is not strictly cheaper, then lifts
    the result to the smallest count meeting ``p_min``. When that count
    does not fit in ``tau`` the interval is stretched to fit it (or, with
    ``strict``, :class:`InfeasibleError` is raised).
    """
    dev = fleet[index]
    cap = max_attempts(dev, tau)
    if cap < 1:
        if strict:
            raise InfeasibleError(f"device {dev.id}: interval {tau} s shorter than one attempt")
        s = max(1, device_min_attempts(dev, env))
        tau = s * dev.unit_sense_time
        return StageResult(s, device_cost(index, s, tau, offload, fleet, env).weighted_cost,
                           feasibility_repair_applied=True, sampling_interval=tau)

    def cost(s):
        return device_cost(index, s, tau, offload, fleet, env).weighted_cost

    s = 1
    c = cost(1)
    while s < cap:
        nxt = cost(s + 1)
        if not nxt < c:
            break
        s, c = s + 1, nxt

    s_min = device_min_attempts(dev, env)
    if s >= s_min:
        return StageResult(s, c, sampling_interval=tau)
    if s_min <= cap:
        return StageResult(s_min, cost(s_min), sampling_interval=tau)
    if strict:
        raise InfeasibleError(
            f"device {dev.id}: p_min needs {s_min} attempts, interval {tau} s fits {cap}")
    tau = s_min * dev.unit_sense_time
    return StageResult(s_min, device_cost(index, s_min, tau, offload, fleet, env).weighted_cost,
                       feasibility_repair_applied=True, sampling_interval=tau)


def brute_force_sensing(index: int, tau: float, offload: Sequence[int],
                        fleet: Sequence[DeviceProfile], env: Environment) -> StageResult:
    """Exhaustive argmin over every feasible attempt count, ties to the smallest."""
    dev = fleet[index]
    lo = max(1, device_min_attempts(dev, env))
    hi = max_attempts(dev, tau)
    if hi < lo:
        raise InfeasibleError(f"device {dev.id}: no attempt count in [{lo}, {hi}]")
    best = None
    for s in range(lo, hi + 1):
        c = device_cost(index, s, tau, offload, fleet, env).weighted_cost
        if best is None or c < best[1]:
            best = (s, c)
    return StageResult(best[0], best[1], sampling_interval=tau)
