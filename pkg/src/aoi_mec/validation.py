"""Oracle suites: each optimizer or closed form checked against an independent route.

Every ``check_*`` function draws its own seeded random instances, runs the
production code and the oracle side by side, and returns a
:class:`CheckResult`. The default tolerances are the acceptance thresholds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from .aoi import average_aoi, device_cost, expected_completion_time, simulate_renewal
from .game import (best_response, exhaustive_offload_oracle, interference_at,
                   offload_threshold, run_best_response_dynamics)
from .model import (DeviceProfile, Environment, multi_attempt_success_prob,
                    pass_breakdown, sensing_success_prob)
from .stages import (InfeasibleError, brute_force_sensing, device_min_attempts,
                     max_attempts, optimal_sampling_interval, optimize_sensing)


@dataclass
class CheckResult:
    name: str
    passed: bool
    metric: float
    detail: str
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark}  {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(fn: Callable[..., CheckResult]):
    def wrapper(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --- random instances -------------------------------------------------------

def random_device(rng: np.random.Generator, ident: int = 0,
                  max_server_distance: float = 35.0) -> DeviceProfile:
    return DeviceProfile(
        id=ident, event_distance=float(rng.uniform(0.1, 25.0)),
        unit_sense_time=float(rng.choice([0.1, 0.2, 0.3])),
        data_size=float(rng.uniform(1e6, 8e6)), cpu_cycles=float(rng.uniform(5e8, 2e9)),
        sense_energy_per_bit=1e-9, tx_power=float(rng.uniform(0.05, 0.2)),
        local_cpu_freq=float(rng.uniform(0.8e9, 1.0e9)),
        server_distance=float(rng.uniform(1.0, max_server_distance)))


def random_fleet(rng: np.random.Generator, n: int) -> list[DeviceProfile]:
    return [random_device(rng, i) for i in range(n)]


def random_environment(rng: np.random.Generator, **fixed) -> Environment:
    kw = dict(p_min=float(rng.uniform(0.3, 0.95)), tau_min=float(rng.uniform(0.2, 1.5)),
              weight_aoi=float(rng.uniform(0.1, 0.9)),
              edge_data_threshold=float(rng.uniform(4e6, 4e7)))
    kw["weight_energy"] = 1 - kw["weight_aoi"]
    kw.update(fixed)
    return Environment(**kw)


# --- analytical AoI vs simulation ------------------------------------------

def _renewal_instance(rng: np.random.Generator, env: Environment):
    """Single device with P >= 0.5 and T1/P <= tau/2, by rejection."""
    while True:
        dev = random_device(rng)
        s = int(rng.integers(1, 7))
        x = [int(rng.integers(0, 2))]
        p = multi_attempt_success_prob(sensing_success_prob(dev, env), s)
        if p < 0.5:
            continue
        t1 = pass_breakdown(0, s, x, [dev], env).time
        lo = max(env.tau_min, s * dev.unit_sense_time, 2 * t1 / p)
        tau = lo * float(rng.uniform(1.0, 3.0))
        return [dev], s, tau, x


@_timed
def check_renewal_aoi(instances: int = 50, cycles: int = 100_000, tol: float = 0.02,
                      seed: int = 1) -> CheckResult:
    """Closed-form average AoI against the event-driven renewal simulator."""
    rng = np.random.default_rng(seed)
    env = Environment()
    worst = 0.0
    for k in range(instances):
        fleet, s, tau, x = _renewal_instance(rng, env)
        exact = average_aoi(0, s, tau, x, fleet, env)
        sim = simulate_renewal(0, s, tau, x, fleet, env, seed=seed * 1000 + k, cycles=cycles)
        worst = max(worst, abs(sim.avg_aoi - exact) / exact)
    return CheckResult("renewal AoI", worst <= tol, worst,
                       f"max relative error {worst:.4%} over {instances} devices (tol {tol:.0%})")


@_timed
def check_completion_time(draws: int = 1_000_000, tol: float = 0.01, seed: int = 2,
                          probs=(0.25, 0.5, 0.75, 0.9), t1: float = 1.3) -> CheckResult:
    """Expected retry time against the sample mean of geometric pass counts."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in probs:
        mc = t1 * rng.geometric(p, size=draws).mean()
        worst = max(worst, abs(mc - expected_completion_time(t1, p)) / (t1 / p))
    return CheckResult("completion time", worst <= tol, worst,
                       f"max relative error {worst:.4%} for P in {list(probs)} (tol {tol:.0%})")


# --- stage solvers ----------------------------------------------------------

@_timed
def check_sensing_exactness(instances: int = 1000, seed: int = 3) -> CheckResult:
    """Early-stop enumeration against exhaustive search over all feasible counts."""
    rng = np.random.default_rng(seed)
    mismatches = infeasible = 0
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        fleet = random_fleet(rng, n)
        env = random_environment(rng)
        i = int(rng.integers(0, n))
        tau = float(rng.uniform(env.tau_min, 4.0))
        x = [int(b) for b in rng.integers(0, 2, size=n)]
        try:
            want = brute_force_sensing(i, tau, x, fleet, env).value
        except InfeasibleError:
            want = None
        try:
            got = optimize_sensing(i, tau, x, fleet, env, strict=True).value
        except InfeasibleError:
            got = None
        infeasible += want is None
        mismatches += got != want
    return CheckResult("sensing exactness", mismatches == 0, mismatches,
                       f"{mismatches} mismatches in {instances} instances "
                       f"({infeasible} infeasible in both)")


def _golden_interval(index, s, x, fleet, env) -> float:
    """Numerical minimizer of the interval-dependent device cost over tau >= tau_min.

    The constant T1/P part of the AoI is dropped; left in, it swamps the
    curvature and caps the attainable argmin precision near 1e-6.
    """
    def f(tau):
        c = device_cost(index, s, tau, x, fleet, env)
        return env.weight_aoi * tau / 2 + env.weight_energy * c.avg_energy
    # the cost is a*tau + b/tau: bracket around the unconstrained minimum first
    xa, xb, xc, *_ = optimize.bracket(f, xa=1e-3, xb=1e-2)
    tau = optimize.golden(f, brack=(xa, xb, xc), tol=1e-12)
    return max(tau, env.tau_min)


@_timed
def check_sampling_closed_form(instances: int = 1000, tol: float = 1e-6,
                               seed: int = 4) -> CheckResult:
    """Closed-form interval against golden-section minimization of the device cost."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    clamped = 0
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        fleet = random_fleet(rng, n)
        # small tau_min so both clamped and interior optima occur
        env = random_environment(rng, tau_min=float(rng.uniform(0.01, 0.4)))
        i = int(rng.integers(0, n))
        s = int(rng.integers(1, 8))
        x = [int(b) for b in rng.integers(0, 2, size=n)]
        closed = optimal_sampling_interval(i, s, x, fleet, env).value
        numeric = _golden_interval(i, s, x, fleet, env)
        clamped += closed == env.tau_min
        worst = max(worst, abs(closed - numeric) / numeric)
    return CheckResult("sampling closed form", worst <= tol, worst,
                       f"max relative gap {worst:.2e} over {instances} instances "
                       f"({clamped} at the lower bound; tol {tol:g})")


# --- offloading game --------------------------------------------------------

def _game_instance(rng: np.random.Generator, n: int):
    fleet = random_fleet(rng, n)
    env = random_environment(rng)
    taus, ss = [], []
    for dev in fleet:
        tau = float(rng.uniform(env.tau_min, 3.0))
        s_lo = device_min_attempts(dev, env)
        tau = max(tau, s_lo * dev.unit_sense_time)
        ss.append(int(rng.integers(s_lo, max_attempts(dev, tau) + 1)))
        taus.append(tau)
    return fleet, env, ss, taus


@_timed
def check_game(instances: int = 200, max_devices: int = 12, seed: int = 5) -> CheckResult:
    """Best-response dynamics: termination, Nash membership, strict potential descent."""
    rng = np.random.default_rng(seed)
    not_nash = bad_phi = failed = 0
    updates = 0
    for _ in range(instances):
        n = int(rng.integers(2, max_devices + 1))
        fleet, env, ss, taus = _game_instance(rng, n)
        try:
            res = run_best_response_dynamics(fleet, ss, taus, env)
        except RuntimeError:
            failed += 1
            continue
        oracle = exhaustive_offload_oracle(fleet, ss, taus, env)
        not_nash += not oracle.contains(res.offload)
        bad_phi += sum(not r.potential_after < r.potential_before for r in res.trace)
        updates += res.updates
    ok = failed == not_nash == bad_phi == 0
    return CheckResult("offloading game", ok, failed + not_nash + bad_phi,
                       f"{failed} non-terminating, {not_nash} outside the Nash set, "
                       f"{bad_phi} non-decreasing potential steps in {updates} updates "
                       f"over {instances} instances")


@_timed
def check_threshold_rule(instances: int = 200, knife_edge: float = 1e-9,
                         seed: int = 6) -> CheckResult:
    """Interference-threshold best response against direct cost comparison."""
    rng = np.random.default_rng(seed)
    disagree = skipped = offload = 0
    for _ in range(instances):
        n = int(rng.integers(1, 9))
        fleet = random_fleet(rng, n)
        env = random_environment(rng, edge_data_threshold=1e12)
        i = int(rng.integers(0, n))
        ss = [int(rng.integers(1, 6)) for _ in range(n)]
        taus = [max(float(rng.uniform(env.tau_min, 3.0)), s * d.unit_sense_time)
                for s, d in zip(ss, fleet)]
        x = [int(b) for b in rng.integers(0, 2, size=n)]
        L = offload_threshold(i, ss[i], taus[i], fleet, env)
        if L is not None and abs(interference_at(i, x, fleet, env) - L) <= knife_edge:
            skipped += 1
            continue
        a = best_response(i, x, ss, taus, fleet, env, method="threshold")
        b = best_response(i, x, ss, taus, fleet, env, method="direct")
        disagree += a != b
        offload += b
    return CheckResult("threshold rule", disagree == 0, disagree,
                       f"{disagree} disagreements in {instances - skipped} instances "
                       f"({offload} offload, {skipped} knife-edge skipped)")


ORACLE_SUITES = {
    "renewal": check_renewal_aoi,
    "completion": check_completion_time,
    "sensing": check_sensing_exactness,
    "sampling": check_sampling_closed_form,
    "game": check_game,
    "threshold": check_threshold_rule,
}


def run_oracle_suites(names=None, quick: bool = False) -> list[CheckResult]:
    """Run the named suites (all by default); ``quick`` shrinks instance counts."""
    names = list(ORACLE_SUITES) if not names else names
    out = []
    for name in names:
        fn = ORACLE_SUITES[name]
        if quick:
            kw = {"renewal": dict(instances=5, cycles=20_000, tol=0.05),
                  "completion": dict(draws=100_000, tol=0.02),
                  "game": dict(instances=20, max_devices=8)}.get(name, dict(instances=100))
            out.append(fn(**kw))
        else:
            out.append(fn())
    return out

