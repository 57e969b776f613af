"""Acceptance criteria 1-12 at their stated tolerances and runtime budgets.

Each test logs one PASS/FAIL line (collected in the terminal summary) and then
asserts the same verdict.  Runtime budgets are wall-clock on this machine with
default_workers() processes.
"""
import json
import time

from burgers_levels.planner import minimal_levels
from burgers_levels.verification import (check_decomposition_identity,
                                         check_distributional_match, check_lattice_sums,
                                         check_girsanov, check_jz_decay, check_level_regularity,
                                         check_mollifier_independence, check_ou_covariance,
                                         check_ou_regularity, check_planner_table,
                                         check_resonant_decay, check_spectral_budget,
                                         check_theta_z_decay, check_wick2_decay,
                                         check_zero_noise_identity, default_workers,
                                         reports_to_json, run_suite)

SEED = 0
WORKERS = default_workers()


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def summary(reports):
    return "; ".join(f"{r.check}={r.measured if r.measured is None else round(r.measured, 4)}"
                     f" ({r.verdict})" for r in reports)


def test_criterion_01_ou_covariance(criterion):
    r, sec = timed(lambda: check_ou_covariance(SEED, WORKERS))
    ok = r.passed and sec < 60
    criterion(1, ok, f"max |z| = {r.measured:.3f} over {r.details['comparisons']} comparisons, "
                     f"{r.details['outside_3se']} beyond 3 SE, {sec:.1f} s")
    assert ok


def test_criterion_02_ou_regularity(criterion):
    reports, sec = timed(lambda: [check_ou_regularity(g, SEED, WORKERS) for g in (0.3, 0.6, 0.9)])
    ok = all(r.passed for r in reports) and sec < 120
    criterion(2, ok, f"{summary(reports)}, {sec:.1f} s")
    assert ok


def test_criterion_03_chaos_decay(criterion):
    def run():
        out = [check_wick2_decay(g, SEED, WORKERS) for g in (0.5, 0.55, 0.6, 0.7)]
        out += check_jz_decay(0.8, SEED, WORKERS) + check_jz_decay(0.9, SEED, WORKERS)
        out.append(check_resonant_decay(0.7, 0.7, SEED, WORKERS))
        out.append(check_theta_z_decay(0.6, SEED, WORKERS))
        return out
    reports, sec = timed(run)
    ok = all(r.passed for r in reports) and sec < 15 * 60
    criterion(3, ok, f"{summary(reports)}, {sec:.0f} s on {WORKERS} worker(s)")
    assert ok


def test_criterion_04_mollifier_independence(criterion):
    r = check_mollifier_independence(0.6, SEED, WORKERS)
    criterion(4, r.passed, f"max |z| = {r.measured:.3f}, {r.details['outside_3se']} beyond 3 SE")
    assert r.passed


def test_criterion_05_planner(criterion):
    r, sec = timed(check_planner_table)
    spots = {0.6: 1, 0.8: 2, 0.9: 5, 0.99: 50}
    spots_ok = all(minimal_levels(a) == n for a, n in spots.items())
    ok = r.passed and spots_ok and sec < 1.0
    criterion(5, ok, f"{r.details['grid_points']}-point grid, spots {r.details['spots']}, "
                     f"{sec * 1e3:.0f} ms")
    assert ok


def test_criterion_06_spectral_budget(criterion):
    r = check_spectral_budget(K=256)
    criterion(6, r.passed, f"max relative budget error {r.measured:.2e}")
    assert r.passed


def test_criterion_07_decomposition_identity(criterion):
    def run():
        return check_decomposition_identity(0.6, 64, 1e-3, 0.5, SEED), check_zero_noise_identity()
    (reports, zero), sec = timed(run)
    disc, order = reports
    ok = disc.passed and order.passed and zero.passed and sec < 300
    criterion(7, ok, f"discrepancy {disc.measured:.4f} (same-dt "
                     f"{disc.details['same_resolution_discrepancy']:.1e}), order "
                     f"{order.measured:.3f}, zero-noise {zero.measured:.1e}, {sec:.0f} s")
    assert ok


def test_criterion_08_level_regularity(criterion):
    reports, sec = timed(lambda: check_level_regularity(0.8, seed=SEED, workers=WORKERS))
    ok = all(r.passed for r in reports) and sec < 600
    criterion(8, ok, f"{summary(reports)}, {sec:.0f} s")
    assert ok


def test_criterion_09_girsanov(criterion):
    reports, sec = timed(lambda: check_girsanov(0.6, SEED, WORKERS) + check_girsanov(0.9, SEED, WORKERS))
    ok = all(r.passed for r in reports) and sec < 300
    criterion(9, ok, f"growth per doubling: {summary(reports)}, {sec:.0f} s")
    assert ok


def test_criterion_10_lattice_sums(criterion):
    reports, sec = timed(check_lattice_sums)
    ok = len(reports) == 6 and all(r.passed for r in reports) and sec < 30
    criterion(10, ok, f"{summary(reports)}, {sec:.1f} s")
    assert ok


def test_criterion_11_distributional_match(criterion):
    reports, sec = timed(lambda: check_distributional_match(0.6, seed=SEED, workers=WORKERS))
    main, self_test, _ = reports
    survivors = min(main.details["survivors"])
    ok = main.passed and self_test.passed and survivors >= 1000 and sec < 600
    criterion(11, ok, f"sum vs u min p = {main.measured:.3g}, z vs z min p = "
                      f"{self_test.measured:.3g}, Bonferroni level {main.predicted:.2e}, "
                      f"{survivors} survivors, {sec:.0f} s")
    assert ok


def test_criterion_12_determinism(criterion):
    docs = [json.dumps(reports_to_json(run_suite("fast", SEED, w), "fast", SEED), sort_keys=True)
            for w in (1, 2, 1)]
    ok = docs[0] == docs[1] == docs[2]
    criterion(12, ok, f"fast suite with workers 1, 2, 1: {len(docs[0])} bytes, "
                      f"{'identical' if ok else 'different'}")
    assert ok
