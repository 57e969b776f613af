import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from burgers_levels.errors import UnsupportedRegimeError
from burgers_levels.gaussian import etd_coefficients, ou_step_coeffs
from burgers_levels.noise import NoiseBank
from burgers_levels.planner import (_threshold, constraint_margins, materialize_spectra,
                                    minimal_levels, plan_schedule, validate_plan)
from burgers_levels.spectral import (DyadicPartition, SpectralField, bony_coeffs,
                                     l2_norm_coeffs, pointwise_product, to_grid)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def coeff_arrays(draw, k_min=1, k_max=24):
    K = draw(st.integers(k_min, k_max))
    re = draw(arrays(float, K, elements=finite))
    im = draw(arrays(float, K, elements=finite))
    return re + 1j * im


@given(coeff_arrays())
def test_grid_values_are_real_and_parseval_holds(c):
    M = 4 * len(c) + 2
    g = to_grid(c, M)
    assert g.dtype == float
    # mean of u^2 over the grid equals 2 sum |c_k|^2
    assert np.isclose(np.mean(g ** 2), 2 * np.sum(np.abs(c) ** 2), rtol=1e-10, atol=1e-10)
    assert np.isclose(l2_norm_coeffs(c) ** 2, 2 * np.pi * np.mean(g ** 2), rtol=1e-10, atol=1e-9)


@given(coeff_arrays(k_min=2), st.floats(1e-4, 0.5), st.floats(1e-4, 0.5))
def test_heat_semigroup(c, s, t):
    d_s = etd_coefficients(len(c), s)[0]
    d_t = etd_coefficients(len(c), t)[0]
    d_st = etd_coefficients(len(c), s + t)[0]
    assert np.allclose(d_s * d_t * c, d_st * c, rtol=1e-12, atol=1e-300)
    zero = np.zeros_like(c)
    assert np.allclose(ou_step_coeffs(ou_step_coeffs(c, 1.0, s, zero), 1.0, t, zero),
                       ou_step_coeffs(c, 1.0, s + t, zero))


@settings(deadline=None, max_examples=40)
@given(st.data(), st.sampled_from(["sharp", "smooth"]))
def test_bony_pieces_sum_to_product(data, mode):
    a = data.draw(coeff_arrays(k_min=4, k_max=40))
    b = data.draw(arrays(float, len(a), elements=finite)) + 0j
    lt, res, gt = bony_coeffs(a, b, DyadicPartition(mode))
    full = pointwise_product(SpectralField(a), SpectralField(b)).coeffs
    scale = 1 + np.abs(full).max()
    assert np.allclose(lt + res + gt, full, atol=1e-10 * scale)


@settings(max_examples=300)
@given(st.floats(0.0, 0.999, exclude_max=True))
def test_planner_valid_everywhere(alpha):
    try:
        p = plan_schedule(alpha)
    except UnsupportedRegimeError:
        # only allowed within rounding distance of a threshold
        n = minimal_levels(alpha)
        assert _threshold(n) - alpha < 1e-9
        return
    assert validate_plan(p) == []
    assert all(v > 0 for v in constraint_margins(p).values())
    if p.n >= 1:
        # minimality: one level fewer cannot reach 1/2 within the slack
        n = p.n
        assert alpha < (2 * n + 1) / (2 * n + 2)
        assert n == 1 or alpha >= (2 * n - 1) / (2 * n)
    assert p.n == minimal_levels(alpha)


@settings(deadline=None, max_examples=30)
@given(st.floats(0.5, 0.98), st.sampled_from([8, 33, 128]))
def test_budget_closes(alpha, K):
    assume(_threshold(minimal_levels(alpha)) - alpha > 1e-9)
    p = materialize_spectra(plan_schedule(alpha), K)
    total = np.sum(p.level_spectra ** 2, axis=0) + p.remainder_spectrum ** 2
    assert np.allclose(total, p.base_spectrum ** 2, rtol=1e-12)


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 9), st.integers(1, 9))
def test_noise_independent_of_chunking(seed, chunk_a, chunk_b):
    a = NoiseBank(seed, 3, [0, 1], 4, chunk=chunk_a)
    b = NoiseBank(seed, 3, [1], 4, chunk=chunk_b)
    for _ in range(12):
        assert np.array_equal(a.next()[1], b.next()[0])
