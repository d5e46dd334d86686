import math

import pytest

from aoi_mec.aoi import device_cost
from aoi_mec.stages import (InfeasibleError, brute_force_sensing, max_attempts,
                            min_attempts_for_pmin, optimal_sampling_interval,
                            optimize_sensing, pass_energy, sampling_objective)

from helpers import desk_device, desk_env


def _two_joule_device():
    # 4e-3 J sensing + c * 1e-11 J local processing = 2 J per pass
    return desk_device(cpu_cycles=(2 - 4e-3) / 1e-11)


def test_closed_form_interval():
    fleet = [_two_joule_device()]
    env = desk_env(weight_aoi=1.0, weight_energy=1.0, tau_min=0.1)
    assert pass_energy(0, 1, [0], fleet, env) == pytest.approx(2.0)
    res = optimal_sampling_interval(0, 1, [0], fleet, env)
    assert res.value == pytest.approx(2.0)
    assert res.sampling_interval == res.value
    assert res.cost_at_optimum == pytest.approx(device_cost(0, 1, 2.0, [0], fleet, env).weighted_cost)


def test_closed_form_interval_clamped():
    fleet = [_two_joule_device()]
    env = desk_env(weight_aoi=1.0, weight_energy=1.0, tau_min=3.0)
    assert optimal_sampling_interval(0, 1, [0], fleet, env).value == 3.0
    env = desk_env(weight_aoi=1.0, weight_energy=1.0, tau_min=0.1)
    assert optimal_sampling_interval(0, 1, [0], fleet, env, lower=2.5).value == 2.5


def test_interval_stationarity_and_local_minimality():
    fleet = [_two_joule_device()]
    env = desk_env(weight_aoi=0.3, weight_energy=0.7, tau_min=0.1)
    tau = optimal_sampling_interval(0, 1, [0], fleet, env).value
    e = pass_energy(0, 1, [0], fleet, env)
    assert abs(env.weight_aoi / 2 - env.weight_energy * e / tau ** 2) <= 1e-9
    f = sampling_objective
    assert f(tau, e, env) <= f(tau * 1.01, e, env)
    assert f(tau, e, env) <= f(tau * 0.99, e, env)


def test_interval_without_aoi_weight_is_unbounded():
    env = desk_env(weight_aoi=0.0, weight_energy=1.0)
    res = optimal_sampling_interval(0, 1, [0], [desk_device()], env)
    assert res.unbounded and res.value == env.tau_max


def test_min_attempts_examples():
    assert min_attempts_for_pmin(0.9, 0.5) == 1
    assert min_attempts_for_pmin(0.449329, 0.7) == 3
    assert 1 - (1 - 0.449329) ** 2 == pytest.approx(0.6968, abs=1e-4)
    assert 1 - (1 - 0.449329) ** 3 == pytest.approx(0.8330, abs=1e-4)
    assert min_attempts_for_pmin(0.5, 0.75) == 2
    assert min_attempts_for_pmin(1.0, 0.99) == 1
    with pytest.raises(ValueError):
        min_attempts_for_pmin(0.5, 1.0)


def test_min_attempts_matches_ceil_formula_off_boundaries():
    for rho in (0.05, 0.135, 0.3, 0.449329, 0.7):
        for p_min in (0.3, 0.55, 0.7, 0.85, 0.95):
            want = max(1, math.ceil(math.log(1 - p_min) / math.log(1 - rho)))
            assert min_attempts_for_pmin(rho, p_min) == want


def test_max_attempts_survives_round_trip():
    dev = desk_device()
    for s in range(1, 40):
        assert max_attempts(dev, s * dev.unit_sense_time) == s


def test_sensing_stops_immediately_when_cost_rises():
    # perfect sensing: a second attempt only adds time and energy
    fleet = [desk_device(event_distance=0.0)]
    env = desk_env(p_min=0.5)
    res = optimize_sensing(0, 2.0, [0], fleet, env)
    assert res.value == 1 and not res.feasibility_repair_applied


def test_sensing_interior_optimum_matches_brute_force():
    fleet = [desk_device(event_distance=20.0)]  # single attempt succeeds about 20% of the time
    env = desk_env(p_min=0.3)
    res = optimize_sensing(0, 4.0, [0], fleet, env)
    assert res.value > 2
    assert res.value == brute_force_sensing(0, 4.0, [0], fleet, env).value
    assert res.cost_at_optimum == brute_force_sensing(0, 4.0, [0], fleet, env).cost_at_optimum


def test_sensing_lifted_to_success_floor():
    fleet = [desk_device(event_distance=0.0)]
    env = desk_env(p_min=0.5)
    assert optimize_sensing(0, 2.0, [0], fleet, env).value == 1
    fleet = [desk_device(event_distance=15.0)]  # rho = 0.301
    env = desk_env(p_min=0.9)
    res = optimize_sensing(0, 2.0, [0], fleet, env)
    assert res.value == min_attempts_for_pmin(math.exp(-1.2), 0.9) == 7
    assert res.value == brute_force_sensing(0, 2.0, [0], fleet, env).value


def test_sensing_repair_and_strict():
    fleet = [desk_device(event_distance=15.0)]
    env = desk_env(p_min=0.9)
    res = optimize_sensing(0, 0.5, [0], fleet, env)
    assert res.feasibility_repair_applied
    assert res.value == 7
    assert res.sampling_interval == pytest.approx(7 * 0.2)
    with pytest.raises(InfeasibleError):
        optimize_sensing(0, 0.5, [0], fleet, env, strict=True)
    with pytest.raises(InfeasibleError):
        brute_force_sensing(0, 0.5, [0], fleet, env)


def test_sensing_interval_shorter_than_one_attempt():
    env = desk_env(tau_min=0.05)
    with pytest.raises(InfeasibleError):
        optimize_sensing(0, 0.1, [0], [desk_device()], env, strict=True)
    res = optimize_sensing(0, 0.1, [0], [desk_device()], env)
    assert res.feasibility_repair_applied
    assert res.value == 3 and res.sampling_interval == pytest.approx(0.6)


def test_brute_force_single_feasible_count():
    fleet = [desk_device(event_distance=15.0)]
    env = desk_env(p_min=0.9)
    assert brute_force_sensing(0, 7 * 0.2, [0], fleet, env).value == 7


def test_perfect_sensing_needs_one_attempt():
    fleet = [desk_device(event_distance=0.0)]
    for p_min in (0.1, 0.5, 0.99):
        assert optimize_sensing(0, 3.0, [1], fleet, desk_env(p_min=p_min)).value == 1
