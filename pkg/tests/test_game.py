import math

import pytest

from aoi_mec.game import (GameNonConvergence, admission_filter, best_response,
                          exhaustive_offload_oracle, fits_capacity, interference_at,
                          offload_threshold, option_costs, potential, potential_thresholds,
                          run_best_response_dynamics)
from aoi_mec.model import device_gain

from helpers import desk_device, desk_env


def test_interference_at():
    env = desk_env()
    fleet = [desk_device(0), desk_device(1), desk_device(2, server_distance=50.0)]
    assert interference_at(0, [1, 0, 0], fleet, env) == 0.0
    assert interference_at(0, [0, 1, 0], fleet, env) == pytest.approx(2.56e-7)
    assert interference_at(0, [0, 1, 1], fleet, env) == pytest.approx(
        interference_at(0, [0, 1, 0], fleet, env) + interference_at(0, [0, 0, 1], fleet, env))


def test_threshold_undefined_without_any_advantage():
    env = desk_env()
    # edge slower than local and next to no local energy to save
    slow_edge = env.with_overrides(edge_cpu_freq=5e8, delta_convention="constant",
                                   local_energy_per_cycle_coeff=1e-300)
    fleet = [desk_device()]
    assert offload_threshold(0, 1, 1.0, fleet, slow_edge) is None
    assert best_response(0, [0], [1], [1.0], fleet, slow_edge, method="threshold") == 0
    assert best_response(0, [0], [1], [1.0], fleet, slow_edge) == 0


def test_desk_threshold_is_the_indifference_point():
    env = desk_env()
    s, tau = 3, 1.0
    me = desk_device(0)  # rho = 0.449329, so P(3) = 0.833
    L = offload_threshold(0, s, tau, [me], env)
    p = 1 - (1 - math.exp(-0.8)) ** 3
    assert p == pytest.approx(0.833, abs=1e-3)
    expo = (0.5 * 4e6 * tau + 0.5 * 0.1 * 4e6 * p) / (1e8 * (0.5 * tau * (1 - 0.05) + 0.5 * p * 0.01))
    assert L == pytest.approx(2.56e-6 * 0.1 / (2 ** expo - 1) - 1e-13, rel=1e-10)
    assert L > 0
    # a second offloader whose received power is exactly L
    jam = desk_device(1, server_distance=30.0)
    jam = desk_device(1, server_distance=30.0, tx_power=L / device_gain(jam, env))
    fleet = [me, jam]
    assert interference_at(0, [0, 1], fleet, env) == pytest.approx(L, rel=1e-12)
    c0, c1 = option_costs(0, [0, 1], s, tau, fleet, env)
    assert c0 == pytest.approx(c1, abs=1e-9)


def test_negative_threshold_means_local_even_alone():
    env = desk_env()
    far = desk_device(server_distance=2000.0, data_size=8e7)
    L = offload_threshold(0, 1, 1.0, [far], env)
    assert L is not None and L < 0
    assert best_response(0, [0], [1], [1.0], [far], env, method="threshold") == 0
    assert best_response(0, [0], [1], [1.0], [far], env) == 0


def test_single_device_offloads_when_threshold_nonnegative():
    env = desk_env()
    fleet = [desk_device()]
    assert offload_threshold(0, 1, 1.0, fleet, env) >= 0
    assert best_response(0, [0], [1], [1.0], fleet, env, method="threshold") == 1
    assert best_response(0, [0], [1], [1.0], fleet, env) == 1


def test_refused_request_means_local():
    env = desk_env(edge_data_threshold=6e6)
    fleet = [desk_device(0), desk_device(1)]
    assert fits_capacity(0, [0, 0], fleet, env)
    assert not fits_capacity(0, [0, 1], fleet, env)
    assert best_response(0, [0, 1], [1, 1], [1.0, 1.0], fleet, env) == 0


def test_admission_filter_examples():
    env = desk_env(edge_data_threshold=6.0)
    fleet = [desk_device(i, data_size=float(i + 1)) for i in range(5)]
    assert admission_filter([1] * 5, fleet, env) == [1, 1, 1, 0, 0]
    assert admission_filter([1, 0, 1, 0, 0], fleet, env) == [1, 0, 1, 0, 0]
    assert admission_filter([1] * 5, fleet, desk_env(edge_data_threshold=0.0)) == [0] * 5


def test_admission_filter_ties_evict_largest_id():
    env = desk_env(edge_data_threshold=8e6)
    fleet = [desk_device(i) for i in range(3)]
    assert admission_filter([1, 1, 1], fleet, env) == [1, 1, 0]


def test_potential_single_device():
    env = desk_env()
    fleet = [desk_device()]
    th = potential_thresholds([1], [1.0], fleet, env)
    w = 2.56e-6 * 0.1
    assert potential([1], fleet, th, env) == 0.0
    assert potential([0], fleet, th, env) == pytest.approx(w * th[0])


def test_potential_pairs():
    env = desk_env()
    fleet = [desk_device(i, server_distance=10.0 * (i + 1)) for i in range(3)]
    th = [0.0, 0.0, 0.0]
    w = [device_gain(d, env) * d.tx_power for d in fleet]
    assert potential([1, 1, 1], fleet, th, env) == pytest.approx(
        w[0] * w[1] + w[0] * w[2] + w[1] * w[2])


def test_dynamics_single_device():
    env = desk_env()
    fleet = [desk_device()]
    res = run_best_response_dynamics(fleet, [1], [1.0], env)
    assert res.offload == [1]
    assert res.slots <= 2
    oracle = exhaustive_offload_oracle(fleet, [1], [1.0], env)
    assert oracle.optimum == (1,)
    assert oracle.contains(res.offload)


def test_dynamics_trace_and_potential_descent():
    env = desk_env(edge_data_threshold=1e9)
    fleet = [desk_device(i, server_distance=5.0 + 3 * i) for i in range(8)]
    res = run_best_response_dynamics(fleet, [3] * 8, [1.0] * 8, env)
    assert res.updates == len(res.trace) == res.slots - 1
    for rec in res.trace:
        assert rec.potential_after < rec.potential_before
        assert rec.delta_cost < 0
    header, rows = res.trace_rows()
    assert header[0] == "slot" and len(rows) == res.updates
    assert exhaustive_offload_oracle(fleet, [3] * 8, [1.0] * 8, env).contains(res.offload)


def test_dynamics_respects_capacity():
    env = desk_env(edge_data_threshold=8e6)
    fleet = [desk_device(i, server_distance=20.0 + i) for i in range(6)]
    res = run_best_response_dynamics(fleet, [2] * 6, [1.0] * 6, env)
    assert sum(res.offload) * 4e6 <= 8e6
    assert exhaustive_offload_oracle(fleet, [2] * 6, [1.0] * 6, env).contains(res.offload)


def test_dynamics_slot_cap():
    env = desk_env(edge_data_threshold=1e9)
    fleet = [desk_device(i) for i in range(3)]
    with pytest.raises(GameNonConvergence) as err:
        run_best_response_dynamics(fleet, [1] * 3, [1.0] * 3, env, max_slots=1)
    assert len(err.value.trace) == 1


def test_symmetric_fleet_relabeling_keeps_offload_count():
    env = desk_env(edge_data_threshold=1e9)
    fleet = [desk_device(i, server_distance=12.0) for i in range(6)]
    res = run_best_response_dynamics(fleet, [2] * 6, [1.0] * 6, env)
    perm = [3, 5, 0, 1, 4, 2]
    relabeled = [desk_device(k, server_distance=12.0) for k in perm]
    res2 = run_best_response_dynamics(relabeled, [2] * 6, [1.0] * 6, env)
    assert sorted(res.offload) == sorted(res2.offload)


def test_oracle_nash_and_price_of_anarchy():
    env = desk_env(edge_data_threshold=1e9)
    fleet = [desk_device(i, server_distance=4.0 + 6 * i) for i in range(5)]
    oracle = exhaustive_offload_oracle(fleet, [2] * 5, [1.0] * 5, env)
    assert oracle.nash
    assert oracle.price_of_anarchy() >= 1.0
    assert min(oracle.nash_costs) >= oracle.optimum_cost - 1e-12
    with pytest.raises(ValueError):
        exhaustive_offload_oracle([desk_device(i) for i in range(17)], [1] * 17, [1.0] * 17, env)
