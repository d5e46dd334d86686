"""Average AoI, energy and weighted cost, plus a renewal-process simulator.

The analytical path uses the closed forms: average AoI is
``tau/2 + T1/P`` and average power is the per-pass energy spread over one
sampling interval. ``simulate_renewal`` is an event-driven Monte Carlo
model of the same device that never touches those closed forms.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (DecisionState, DeviceProfile, Environment, PassBreakdown,
                    multi_attempt_success_prob, pass_breakdown,
                    sensing_success_prob)


def expected_completion_time(t1: float, p: float) -> float:
    """Mean total time of geometric retries, each pass lasting ``t1``."""
    if not 0 < p <= 1:
        raise ValueError("success probability must lie in (0, 1]")
    if t1 <= 0:
        raise ValueError("pass time must be positive")
    return t1 / p


@dataclass(frozen=True)
class CostBreakdown:
    avg_aoi: float
    avg_energy: float
    weighted_cost: float
    success_prob: float
    passes: PassBreakdown

    @property
    def sense_share(self) -> float:
        """Fraction of one pass spent sensing (transmission counts as processing)."""
        return self.passes.sense_time / self.passes.time


def _success_prob(device: DeviceProfile, s: int, env: Environment) -> float:
    return multi_attempt_success_prob(sensing_success_prob(device, env), s)


def average_aoi(index: int, s: int, tau: float, offload: Sequence[int],
                fleet: Sequence[DeviceProfile], env: Environment) -> float:
    t1 = pass_breakdown(index, s, offload, fleet, env).time
    return tau / 2 + t1 / _success_prob(fleet[index], s, env)


def average_energy(index: int, s: int, tau: float, offload: Sequence[int],
                   fleet: Sequence[DeviceProfile], env: Environment) -> float:
    # one pass worth of energy per interval, no 1/P retry factor
    return pass_breakdown(index, s, offload, fleet, env).energy / tau


def weighted(env: Environment, aoi: float, energy: float) -> float:
    return env.weight_aoi * aoi + env.weight_energy * energy


def device_cost(index: int, s: int, tau: float, offload: Sequence[int],
                fleet: Sequence[DeviceProfile], env: Environment) -> CostBreakdown:
    pb = pass_breakdown(index, s, offload, fleet, env)
    p = _success_prob(fleet[index], s, env)
    aoi = tau / 2 + pb.time / p
    energy = pb.energy / tau
    return CostBreakdown(aoi, energy, weighted(env, aoi, energy), p, pb)


def fleet_costs(fleet: Sequence[DeviceProfile], decisions: DecisionState,
                env: Environment) -> list[CostBreakdown]:
    return [device_cost(i, decisions.sensing_attempts[i], decisions.sampling_interval[i],
                        decisions.offload, fleet, env)
            for i in range(len(fleet))]


def system_cost(fleet: Sequence[DeviceProfile], decisions: DecisionState,
                env: Environment) -> float:
    return sum(c.weighted_cost for c in fleet_costs(fleet, decisions, env))


@dataclass
class RenewalTrace:
    """Per successful update: inter-generation gap, system time, passes used."""

    gaps: np.ndarray
    system_times: np.ndarray
    attempts: np.ndarray
    horizon: float

    def __len__(self):
        return len(self.gaps)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cycle", "gap", "system_time", "attempts"])
            for j, (x, y, a) in enumerate(zip(self.gaps, self.system_times, self.attempts)):
                w.writerow([j, f"{x:.9g}", f"{y:.9g}", int(a)])


@dataclass
class RenewalResult:
    trace: RenewalTrace
    avg_aoi: float
    avg_energy: float
    mean_attempts: float
    abandoned: int
    low_confidence: bool


def simulate_renewal(index: int, s: int, tau: float, offload: Sequence[int],
                     fleet: Sequence[DeviceProfile], env: Environment,
                     horizon: float | None = None, seed: int = 0,
                     cycles: int = 100_000, warmup: float = 0.01,
                     min_cycles: int = 10_000) -> RenewalResult:
    """Event-driven simulation of one device's sample/sense/process loop.

    A sample is due every ``tau`` seconds. Each pass (sensing plus
    processing) lasts ``T1`` and is valid with probability ``P``; an invalid
    pass is retried at once unless the next sample is already due, in which
    case the stale update is dropped. The age of a delivered update is
    measured from the start of its first pass. Age starts at 0 and the first
    ``warmup`` fraction of the horizon is discarded.
    """
    pb = pass_breakdown(index, s, offload, fleet, env)
    t1, e1 = pb.time, pb.energy
    p = _success_prob(fleet[index], s, env)
    if not math.isfinite(t1):
        raise ValueError("pass time is infinite; device cannot complete updates")
    if horizon is None:
        horizon = cycles * tau
    w0 = warmup * horizon
    rng = np.random.default_rng(seed)
    block = 1 << 16
    draws = rng.random(block)
    k_draw = 0

    gaps, ys, atts = [], [], []
    area = 0.0
    energy = 0.0
    abandoned = 0
    last_gen = 0.0  # age(0) = 0
    last_del = 0.0
    prev_gen = None
    now = 0.0
    epoch = 0
    while True:
        epoch = max(epoch, int(now // tau))
        start = max(epoch * tau, now)
        if start >= horizon:
            break
        gen = start
        attempts = 0
        t = start
        delivered = False
        while True:
            attempts += 1
            if k_draw == block:
                draws = rng.random(block)
                k_draw = 0
            ok = draws[k_draw] < p
            k_draw += 1
            if t >= w0:
                energy += e1
            t += t1
            if ok:
                delivered = True
                break
            if t >= (epoch + 1) * tau:
                abandoned += 1
                break
        now = t
        epoch += 1
        if not delivered:
            continue
        # age over (last_del, t] is (time - last_gen); clip to [w0, horizon]
        a, b = max(last_del, w0), min(t, horizon)
        if b > a:
            area += ((b - last_gen) ** 2 - (a - last_gen) ** 2) / 2
        if prev_gen is not None:
            gaps.append(gen - prev_gen)
            ys.append(t - gen)
            atts.append(attempts)
        prev_gen = gen
        last_gen, last_del = gen, t
    a = max(last_del, w0)
    if horizon > a:
        area += ((horizon - last_gen) ** 2 - (a - last_gen) ** 2) / 2

    span = horizon - w0
    trace = RenewalTrace(np.asarray(gaps), np.asarray(ys), np.asarray(atts, dtype=int), horizon)
    mean_att = float(np.mean(atts)) if atts else math.nan
    return RenewalResult(trace, area / span, energy / span, mean_att, abandoned,
                         len(gaps) < min_cycles)
