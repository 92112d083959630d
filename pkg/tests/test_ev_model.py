"""EV parameter handling, clock arithmetic, and deterministic sampling."""

import json

import numpy as np
import pytest

from flexsum import (DomainError, EvParams, Scenario, battery_rhs,
                     battery_to_hpolytope, chebyshev_radius, clock_to_index,
                     limits_from_params, sample_scenario)
from flexsum.ev_model import parse_clock


def test_parse_clock():
    assert parse_clock("3PM") == 15.0
    assert parse_clock("12AM") == 0.0
    assert parse_clock("12PM") == 12.0
    assert parse_clock("11:30AM") == 11.5
    with pytest.raises(DomainError):
        parse_clock("25PM")
    with pytest.raises(DomainError):
        parse_clock("noon")


def test_clock_to_index_examples():
    assert clock_to_index("6PM", "3PM", 1.0, "up") == 3
    assert clock_to_index("3PM", "3PM", 1.0, "up") == 0
    # 11 hours at 40-minute periods is 16.5 periods; deadlines round down
    assert clock_to_index("5AM", "6PM", 2 / 3, "down") == 16
    assert clock_to_index("5AM", "6PM", 2 / 3, "up") == 17
    with pytest.raises(DomainError):
        clock_to_index("5AM", "6PM", 1.0, "nearest")


def test_overnight_example_limits():
    # 60 kWh battery initially at 20 kWh: net energy spans -20..40 kWh while
    # plugged in, and at least 30 kWh must be delivered by the deadline
    p = EvParams(arrival=0, deadline=16, u_min=-10, u_max=10, x_max=60,
                 x_init=20, x_fin=50, T=18, delta=2 / 3)
    m = limits_from_params(p)
    assert np.all(m.x_hi == 40.0)
    assert np.all(m.x_lo[:16] == -20.0)
    assert np.all(m.x_lo[16:] == 30.0)
    assert m.u_hi[16] == 10.0 and m.u_hi[17] == 0.0
    assert m.u_lo[17] == 0.0


def test_full_window_huge_energy_is_power_box():
    p = EvParams(arrival=0, deadline=3, u_min=-1, u_max=2, x_max=1e6,
                 x_init=1e3, x_fin=1e3, T=4, delta=1.0)
    m = limits_from_params(p)
    assert np.all(m.u_hi == 2.0) and np.all(m.u_lo == -1.0)
    poly = battery_to_hpolytope(m)
    # energy rows are slack: the power box decides membership
    rng = np.random.default_rng(1)
    for _ in range(50):
        u = rng.uniform(-2, 3, size=4)
        from flexsum import contains_point

        assert contains_point(poly, u) == bool(np.all(u >= -1) and np.all(u <= 2))


def test_zero_rate_outside_window():
    p = EvParams(arrival=1, deadline=2, u_min=-5, u_max=5, x_max=50,
                 x_init=10, x_fin=12, T=4, delta=1.0)
    m = limits_from_params(p)
    assert m.u_hi[0] == m.u_lo[0] == 0.0
    assert m.u_hi[3] == m.u_lo[3] == 0.0
    assert m.u_hi[1] == 5.0


def test_infeasible_energy_requirement():
    with pytest.raises(DomainError):
        limits_from_params(EvParams(arrival=0, deadline=0, u_min=-1, u_max=1,
                                    x_max=100, x_init=0, x_fin=50, T=2, delta=1.0))


def test_params_validation():
    with pytest.raises(DomainError):
        EvParams(arrival=3, deadline=2, u_min=-1, u_max=1, x_max=10, x_init=0,
                 x_fin=5, T=4, delta=1.0)
    with pytest.raises(DomainError):
        EvParams(arrival=0, deadline=1, u_min=1, u_max=1, x_max=10, x_init=0,
                 x_fin=5, T=4, delta=1.0)
    with pytest.raises(DomainError):
        EvParams(arrival=0, deadline=1, u_min=-1, u_max=1, x_max=10, x_init=11,
                 x_fin=5, T=4, delta=1.0)


def test_sigma_zero_is_identical_population():
    s = sample_scenario(n=8, T=6, delta=1.0, sigma=0.0, seed=11, homogenize_windows=True)
    assert all(p.x_fin == 40.0 for p in s.params)
    first = battery_rhs(s.models[0])
    assert all(np.array_equal(first, battery_rhs(m)) for m in s.models)
    assert np.array_equal(s.base.h0, first)


def test_sampling_is_deterministic_and_byte_stable():
    a = sample_scenario(n=6, T=12, delta=1.0, sigma=0.7, seed=99)
    b = sample_scenario(n=6, T=12, delta=1.0, sigma=0.7, seed=99)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    c = sample_scenario(n=6, T=12, delta=1.0, sigma=0.7, seed=100)
    assert json.dumps(a.to_dict()) != json.dumps(c.to_dict())


def test_sampled_parameters_within_ranges():
    s = sample_scenario(n=40, T=30, delta=2 / 3, sigma=1.0, seed=5)
    for p in s.params:
        assert 0 <= p.arrival <= p.deadline <= 29
        # 3PM-8PM at 40-minute periods from a 3PM origin: indices 0..8
        assert p.arrival <= 8
        assert p.deadline >= 21  # 5AM is 14 h after 3PM
        assert 10.0 <= p.x_fin <= 70.0
        assert p.u_min == -10.0 and p.u_max == 10.0
        assert p.x_max == 70.0 and p.x_init == 14.0


def test_sampled_sets_are_nonempty():
    s = sample_scenario(n=6, T=12, delta=1.0, sigma=1.0, seed=21)
    for m in s.models:
        assert chebyshev_radius(battery_to_hpolytope(m)) >= 0.0


def test_sweep_configuration_matches_heterogeneity_study():
    s = sample_scenario(n=15, T=12, delta=1.0, sigma=0.5, seed=1, homogenize_windows=True)
    assert len(s.models) == 15 and s.T == 12 and s.delta == 1.0
    assert all(p.arrival == 0 and p.deadline == 11 for p in s.params)


def test_scenario_round_trip():
    s = sample_scenario(n=5, T=8, delta=0.5, sigma=0.9, seed=77)
    restored = Scenario.from_dict(json.loads(json.dumps(s.to_dict())))
    assert json.dumps(restored.to_dict()) == json.dumps(s.to_dict())
    assert np.array_equal(restored.base.h0, s.base.h0)
