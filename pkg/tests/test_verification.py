import functools
import json

import numpy as np
import pytest

from burgers_levels.verification import (CheckReport, EnsembleStats, check_lattice_sums,
                                         check_girsanov, check_planner_table,
                                         check_spectral_budget, check_split_identity,
                                         check_zero_noise_identity, fit_power_law,
                                         lattice_sum_in_hypothesis, gen_ou_squares, reports_to_json,
                                         reports_to_text, run_ensemble, run_suite,
                                         two_sample_battery)


def test_report_json_and_text():
    r = CheckReport("x", 1.0, float("nan"), 0.1, "fail", "statement", ci=(0.5, 1.5),
                    details={"a": np.float64(2.0), "b": np.arange(2)})
    doc = r.to_json()
    json.dumps(doc)
    assert doc["measured"] == "nan" and doc["details"]["b"] == [0, 1]
    assert "[         FAIL] x" in r.text() and not r.passed
    with pytest.raises(ValueError):
        CheckReport("x", None, None, None, "maybe")


def test_ensemble_stats_standard_error():
    sq = np.array([[1.0, 2.0], [3.0, 2.0]])
    s = EnsembleStats.from_squares("ou", sq, [1, 2])
    assert np.allclose(s.m2, [2, 2]) and np.allclose(s.stderr, [1, 0])
    assert s.rows()[0]["k"] == 1


def test_run_ensemble_is_independent_of_workers_and_block():
    fn = functools.partial(gen_ou_squares, gamma=0.6, K=8, times=(0.5,), seed=3)
    a = run_ensemble(fn, 40, workers=1)
    b = run_ensemble(fn, 40, workers=2)
    c = run_ensemble(fn, 40, workers=1, block=7)
    assert np.array_equal(a, b) and np.array_equal(a, c)


def test_fit_power_law_exact():
    ks = np.arange(4, 33)
    slope, se, r2 = fit_power_law(ks, 3.0 * ks ** -1.25)[:3]
    assert np.isclose(slope, -1.25) and r2 > 0.9999


def test_lattice_sum_hypothesis():
    assert lattice_sum_in_hypothesis(0.8, 0.5, "full")
    assert not lattice_sum_in_hypothesis(0.5, 0.4, "full")


def test_cheap_checks_pass():
    reports = [check_planner_table(), check_spectral_budget(), check_zero_noise_identity(),
               check_split_identity()]
    reports += check_lattice_sums(ks=range(2, 17))
    for r in reports:
        assert r.passed, r.text()


def test_girsanov_check_shape():
    reps = check_girsanov(0.6, K=64, dt=1e-2, n_samples=2)
    assert [r.details["expect"] for r in reps] == ["stable", "stable"]
    assert reps[0].details["cutoffs"] == [16, 32, 64]


def test_two_sample_battery_detects_shift():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(200, 4)) + 1j * rng.normal(size=(200, 4))
    b = rng.normal(size=(200, 4)) + 1j * rng.normal(size=(200, 4))
    res_same = two_sample_battery(a, b, k_max=4, n_perm=199)
    res_diff = two_sample_battery(a, 3 * b, k_max=4, n_perm=199)
    assert len(res_same) == 2 * 4 + 1
    assert min(t[2] for t in res_diff) < min(t[2] for t in res_same)


def test_suite_text_and_json():
    reports = run_suite("planner")
    doc = reports_to_json(reports, "planner", 0)
    assert doc["all_pass"] and len(doc["reports"]) == 2
    assert reports_to_text(reports).endswith("2/2 checks passed")
