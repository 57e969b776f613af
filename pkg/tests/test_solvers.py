import math

import numpy as np
import pytest

from burgers_levels.errors import ConfigurationError, DiagnosticError
from burgers_levels.noise import REMAINDER_LABEL
from burgers_levels.planner import plan_schedule
from burgers_levels.solvers import (SystemConfig, fixed_point_regime_check, girsanov_integrand,
                                    girsanov_integrand_diagnostic, run_direct_burgers,
                                    run_frak_system, run_split_remainder, run_x_system, simulate)
from burgers_levels.spectral import FieldPath, SpectralField, l2_norm_coeffs


def rel(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def cfg(alpha=0.8, K=32, dt=1e-3, T=0.1, **kw):
    return SystemConfig(plan_schedule(alpha), K, dt, T, **kw)


def test_zero_noise_zero_data_stays_zero():
    run = simulate(cfg(noise_scale=0.0), "x", [0], direct=True)
    for v in run["fields"].values():
        assert np.all(v == 0)


def test_deterministic_energy_decreases():
    u0 = SpectralField.from_modes(32, {1: 0.5, 2: 0.3j})
    path = run_direct_burgers(cfg(noise_scale=0.0, u0=u0, T=0.5, dt=5e-3))
    energy = l2_norm_coeffs(path.coeff_array())
    assert np.all(np.diff(energy) < 0)


def test_x_system_levels_telescope_to_direct_solution():
    u0 = SpectralField.from_modes(32, {1: 0.4})
    run = simulate(cfg(u0=u0), "x", [0, 1], direct=True)
    f = run["fields"]
    assert rel(f["sum"][-1], f["u"][-1]) < 1e-12


def test_frak_system_sum_matches_direct_solution():
    u0 = SpectralField.from_modes(32, {1: 0.4})
    run = simulate(cfg(u0=u0), "frak", [0], direct=True)
    f = run["fields"]
    assert rel(f["sum"][-1], f["u"][-1]) < 1e-12


def test_uncoupled_direct_run_uses_its_own_noise():
    run = simulate(cfg(coupled=False), "x", [0], direct=True)
    f = run["fields"]
    assert rel(f["sum"][-1], f["u"][-1]) > 0.1


def test_level_zero_is_the_ou_field():
    run = simulate(cfg(), "frak", [0])
    f = run["fields"]
    assert np.array_equal(f["F0"], f["Z0"])


def test_first_level_agrees_between_systems():
    a = run_x_system(cfg())
    b = run_frak_system(cfg())
    assert np.allclose(a.levels[1].coeff_array(), b.levels[1].coeff_array(), atol=1e-14)
    assert np.allclose(a.levels[0].coeff_array(), b.levels[0].coeff_array())


def test_seed_override_changes_only_downstream_levels():
    base = simulate(cfg(), "x", [0])["fields"]
    alt = simulate(cfg(seed_overrides={1: 99}), "x", [0])["fields"]
    assert np.array_equal(base["X0"], alt["X0"])
    assert not np.allclose(base["X1"], alt["X1"])
    alt_rem = simulate(cfg(seed_overrides={REMAINDER_LABEL: 5}), "x", [0])["fields"]
    for i in range(3):
        assert np.array_equal(base[f"X{i}"], alt_rem[f"X{i}"])


def test_samples_do_not_depend_on_batch():
    a = simulate(cfg(), "x", [0, 1, 2])["fields"]
    b = simulate(cfg(), "x", [2])["fields"]
    for name in a:
        assert np.array_equal(a[name][:, 2], b[name][:, 0])


def test_eta_is_the_remainder_ou_field_and_split_sums():
    eta, rho = run_split_remainder(cfg(z0=SpectralField.zeros(32)))
    run = run_frak_system(cfg(z0=SpectralField.zeros(32)))
    assert np.allclose(eta.coeff_array(), run.ou_remainder.coeff_array())
    assert rel((eta.coeff_array() + rho.coeff_array())[-1], run.remainder.coeff_array()[-1]) < 1e-12


def test_blowup_is_frozen_and_monotone():
    u0 = SpectralField.from_modes(16, {1: 50.0})
    c = cfg(K=16, u0=u0, blowup_threshold=10.0, noise_scale=0.0, T=0.05)
    path = run_direct_burgers(c)
    assert path.death_time is not None and not path.alive
    arr = path.coeff_array()
    dead = np.isnan(arr).all(axis=1)
    first = np.argmax(dead)
    assert dead[first:].all()


def test_record_steps_and_save_every():
    run = simulate(cfg(save_every=25), "x", [0])
    assert list(run["steps"]) == [0, 25, 50, 75, 100]
    assert np.allclose(run["times"], [0, 0.025, 0.05, 0.075, 0.1])
    with pytest.raises(ConfigurationError):
        simulate(cfg(), "x", [0], record_steps=[200])


@pytest.mark.parametrize("kw", [dict(dt=0.02), dict(dt=3e-3), dict(noise_scale=-1.0),
                                dict(u0=SpectralField.zeros(8)), dict(save_every=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        cfg(**kw)


def test_level_system_needs_levels():
    with pytest.raises(ConfigurationError):
        simulate(cfg(alpha=0.3), "x", [0])
    with pytest.raises(ConfigurationError):
        simulate(cfg(), "y", [0])


def test_direct_regime_time_step_halving():
    base = dict(alpha=0.3, K=32, T=0.5)
    a = simulate(cfg(dt=1e-3, refine=2, **base), "direct", range(4))["fields"]["u"][-1]
    b = simulate(cfg(dt=5e-4, refine=1, **base), "direct", range(4))["fields"]["u"][-1]
    assert rel(a, b) < 0.02


def test_config_json_has_plan():
    doc = cfg().to_json()
    assert doc["plan"]["n"] == 2 and doc["K"] == 32


@pytest.mark.parametrize("args, regime", [
    ((0.0, 0.5, 0.5), "classical"),
    ((-0.3, 0.5, 0.5), "classical"),
    ((-0.3, 0.5, 0.0), "weighted"),
    ((-0.3, 0.5, -0.6), "weighted"),
    ((-0.6, 0.5, 0.5), "out_of_scope"),
    ((0.0, 0.5, -2.0), "out_of_scope"),
])
def test_fixed_point_regimes(args, regime):
    assert fixed_point_regime_check(*args) == regime


def test_girsanov_single_mode():
    times = np.linspace(0, 1, 101)
    c = np.zeros((101, 4), dtype=complex)
    c[:, 0] = 1.0
    assert np.isclose(girsanov_integrand(c, times, 0.7, "plain", 1.0), 4 * np.pi)
    ts = girsanov_integrand(c, times, 0.7, "time_shifted", 1.0)
    assert np.isclose(ts, 4 * np.pi * (1 - math.exp(-2)) / 2)
    rep = girsanov_integrand_diagnostic(FieldPath.from_array(times, c), 0.7)
    assert rep.cutoffs == (1, 2, 4) and np.isclose(rep.growth_per_doubling, 1.0)
    assert rep.stable(1e-12)
    with pytest.raises(ConfigurationError):
        girsanov_integrand(c, times, 0.7, "other", 1.0)


def test_girsanov_dead_path_raises():
    times = np.linspace(0, 1, 11)
    path = FieldPath.from_array(times, np.ones((11, 4)), death_time=0.55)
    with pytest.raises(DiagnosticError):
        girsanov_integrand_diagnostic(path, 0.7)
    rep = girsanov_integrand_diagnostic(path, 0.7, t=0.5)
    assert rep.value > 0
