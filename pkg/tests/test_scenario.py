import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from waveselect.scenario import (
    CellScenario,
    ScenarioConfig,
    Service,
    UserScenario,
    generate_scenarios,
    make_scenario,
    read_raw_csv,
    write_raw_csv,
)


def test_same_seed_same_scenarios():
    cfg = ScenarioConfig(num_scenarios=3, master_seed=42)
    assert generate_scenarios(cfg) == generate_scenarios(cfg)


def test_different_seed_differs():
    a = generate_scenarios(ScenarioConfig(num_scenarios=2, master_seed=1))
    b = generate_scenarios(ScenarioConfig(num_scenarios=2, master_seed=2))
    assert a != b


def test_default_ranges_respected():
    cfg = ScenarioConfig(num_scenarios=1000, users_per_cell=20)
    scenarios = generate_scenarios(cfg)
    assert len(scenarios) == 1000
    tau = np.concatenate([s.tau_max_s for s in scenarios])
    dop = np.concatenate([s.doppler_hz for s in scenarios])
    assert tau.min() >= 1e-7 and tau.max() <= 6e-6
    assert dop.min() >= 5 and dop.max() <= 2000
    assert all(s.num_users == 20 for s in scenarios)
    assert [s.scenario_id for s in scenarios] == list(range(1000))


def test_service_frequencies_near_one_third():
    # 99.9% binomial interval around 1/3 for 30000 draws is +-0.0089; the band
    # [0.323, 0.343] is slightly wider and holds per-user draws too.
    cfg = ScenarioConfig(num_scenarios=30_000, users_per_cell=1, master_seed=7)
    services = np.concatenate([s.service for s in generate_scenarios(cfg)])
    freq = np.bincount(services, minlength=3) / len(services)
    assert np.all((freq >= 0.323) & (freq <= 0.343)), freq


def _ks_uniform(x, lo, hi):
    u = np.sort((x - lo) / (hi - lo))
    n = len(u)
    i = np.arange(1, n + 1)
    return max(np.max(i / n - u), np.max(u - (i - 1) / n))


def test_tau_marginal_uniform():
    cfg = ScenarioConfig(num_scenarios=5000, users_per_cell=20)
    tau = np.concatenate([s.tau_max_s for s in generate_scenarios(cfg)])
    assert len(tau) >= 100_000
    # asymptotic Kolmogorov critical value at alpha = 0.001
    critical = np.sqrt(-0.5 * np.log(0.001 / 2)) / np.sqrt(len(tau))
    assert _ks_uniform(tau, *cfg.tau_range_s) < critical


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**64 - 1), st.integers(0, 10_000))
def test_scenario_depends_only_on_seed_and_index(seed, index):
    cfg = ScenarioConfig(num_scenarios=index + 1, users_per_cell=3, master_seed=seed)
    assert make_scenario(cfg, index) == make_scenario(cfg, index)
    # generation order does not matter
    other = ScenarioConfig(num_scenarios=1, users_per_cell=3, master_seed=seed)
    assert make_scenario(other, index) == make_scenario(cfg, index)


def test_parallel_generation_matches_serial():
    cfg = ScenarioConfig(num_scenarios=50, users_per_cell=4, master_seed=9)
    assert generate_scenarios(cfg, workers=3) == generate_scenarios(cfg, workers=1)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"num_scenarios": 0},
        {"users_per_cell": 0},
        {"tau_range_s": (2e-6, 1e-6)},
        {"tau_range_s": (0.0, 1e-6)},
        {"doppler_range_hz": (5.0, 5.0)},
        {"master_seed": -1},
    ],
)
def test_invalid_config(kwargs):
    with pytest.raises(ValueError):
        generate_scenarios(ScenarioConfig(**kwargs))


def test_raw_csv_roundtrip():
    cfg = ScenarioConfig(num_scenarios=5, users_per_cell=3, master_seed=11)
    scenarios = generate_scenarios(cfg)
    buf = io.StringIO()
    write_raw_csv(scenarios, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == (
        "scenario_id,u0_tau_s,u0_doppler_hz,u0_service,u1_tau_s,u1_doppler_hz,u1_service,"
        "u2_tau_s,u2_doppler_hz,u2_service"
    )
    back = list(read_raw_csv(io.StringIO(text)))
    assert len(back) == 5
    for a, b in zip(scenarios, back):
        assert a.scenario_id == b.scenario_id
        np.testing.assert_allclose(a.tau_max_s, b.tau_max_s, rtol=1e-8)
        np.testing.assert_allclose(a.doppler_hz, b.doppler_hz, rtol=1e-8)
        np.testing.assert_array_equal(a.service, b.service)
    # the printed form is a fixed point
    buf2 = io.StringIO()
    write_raw_csv(back, buf2)
    assert buf2.getvalue() == text


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "header"),
        ("scenario_id,u0_tau_s,u0_doppler_hz\n", "header"),
        ("scenario_id,u0_tau_s,u0_doppler_hz,u0_service\n0,1e-6,10\n", "line 2"),
        ("scenario_id,u0_tau_s,u0_doppler_hz,u0_service\n0,abc,10,1\n", "line 2"),
        ("scenario_id,u0_tau_s,u0_doppler_hz,u0_service\n0,1e-6,10,5\n", "service"),
    ],
)
def test_raw_csv_errors(text, match):
    with pytest.raises(ValueError, match=match):
        list(read_raw_csv(io.StringIO(text)))


def test_users_view_and_from_users():
    users = [UserScenario(1e-6, 100.0, Service.URLLC), UserScenario(2e-6, 5.0, Service.MMTC)]
    cell = CellScenario.from_users(4, users)
    assert cell.users == users
    assert cell.num_users == 2
    with pytest.raises(ValueError):
        CellScenario.from_users(0, [])
