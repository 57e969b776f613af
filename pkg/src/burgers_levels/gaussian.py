"""Ornstein-Uhlenbeck fields, Wick squares, the heat convolution J, and the
closed-form second moments they are checked against.

The OU field with noise spectrum q_k solves dz = -A z dt + Q dW, z_0 given,
so each mode is a scalar complex OU process with rate k^2:

    z_t(k) = exp(-k^2 t) z_0(k) + int_0^t exp(-k^2 (t-s)) q_k dW_s(k),
    E|z_t(k)|^2 = q_k^2 (1 - exp(-2 k^2 t)) / (2 k^2)     (z_0 = 0).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import exprel

from .errors import ConfigurationError, OutOfRegimeError
from .noise import NoiseStream
from .spectral import (SHARP, DeathState, DyadicPartition, FieldPath, SpectralField,
                       convolve, wavenumbers)


# ---------------------------------------------------------------------------
# exponential integrator coefficients
# ---------------------------------------------------------------------------

def etd_coefficients(K: int, dt: float):
    """(decay, phi, ou_sd) per mode for one step of size dt.

    decay = exp(-k^2 dt); phi = (1 - exp(-k^2 dt)) / k^2, the ETD1 weight
    phi_1(-k^2 dt) dt of a drift frozen over the step; ou_sd is the standard
    deviation of the exact OU increment for unit q_k.
    """
    if not dt > 0:
        raise ConfigurationError("dt must be positive")
    k2 = wavenumbers(K).astype(float) ** 2
    decay = np.exp(-k2 * dt)
    phi = -np.expm1(-k2 * dt) / k2
    sd = np.sqrt(-np.expm1(-2.0 * k2 * dt) / (2.0 * k2))
    return decay, phi, sd


def ou_variance(q, t, k=None) -> np.ndarray:
    """E|z_t(k)|^2 from a zero initial condition (t may be np.inf)."""
    q = np.asarray(q, dtype=float)
    k = wavenumbers(q.shape[-1]) if k is None else np.asarray(k)
    k2 = np.asarray(k, dtype=float) ** 2
    return q ** 2 * (-np.expm1(-2.0 * k2 * t)) / (2.0 * k2)


# ---------------------------------------------------------------------------
# OU processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OUSpec:
    """Noise exponent gamma, spectrum q_k (default |k|^gamma), cutoff K."""

    gamma: float
    K: int
    spectrum: np.ndarray | None = field(default=None, repr=False)
    initial_condition: SpectralField | None = None

    def __post_init__(self):
        q = (wavenumbers(self.K).astype(float) ** self.gamma if self.spectrum is None
             else np.array(self.spectrum, dtype=float))
        if q.shape != (self.K,) or np.any(q <= 0):
            raise ConfigurationError("spectrum must be positive for k = 1..K")
        q.setflags(write=False)
        object.__setattr__(self, "spectrum", q)
        if self.initial_condition is not None and self.initial_condition.cutoff != self.K:
            raise ConfigurationError("initial condition cutoff differs from K")

    @property
    def q(self) -> np.ndarray:
        return self.spectrum

    def initial_coeffs(self) -> np.ndarray:
        if self.initial_condition is None:
            return np.zeros(self.K, dtype=complex)
        return np.array(self.initial_condition.coeffs)


def ou_step_coeffs(c, q, dt: float, xi) -> np.ndarray:
    """Exact OU transition for coefficient arrays (batched along leading axes)."""
    c = np.asarray(c)
    decay, _, sd = etd_coefficients(c.shape[-1], dt)
    return decay * c + q * sd * xi


def ou_step(state: SpectralField, spec: OUSpec, dt: float, noise) -> SpectralField:
    """One exact OU step of size dt.

    `noise` is a NoiseStream (one step is drawn from it) or an array of
    standard complex normals of length K.
    """
    if isinstance(state, DeathState):
        return state
    if state.cutoff != spec.K:
        raise ConfigurationError("state cutoff differs from the OU cutoff")
    xi = noise.draw(1, spec.K)[0] if isinstance(noise, NoiseStream) else np.asarray(noise)
    t = None if state.time_tag is None else state.time_tag + dt
    return SpectralField(ou_step_coeffs(state.coeffs, spec.q, dt, xi), t)


def ou_covariance_oracle(spec: OUSpec, k, s, t):
    """E[z_t(k) conj(z_s(k))] from a zero initial condition."""
    k2 = np.asarray(k, dtype=float) ** 2
    q = spec.q[np.asarray(k) - 1]
    return q ** 2 * (np.exp(-k2 * np.abs(t - s)) - np.exp(-k2 * (t + s))) / (2.0 * k2)


# ---------------------------------------------------------------------------
# nonlinearity, Wick square, heat convolution
# ---------------------------------------------------------------------------

def b_coeffs(a, b=None) -> np.ndarray:
    """B(f, g) = d/dx (f g) on coefficient arrays."""
    a = np.asarray(a)
    return 1j * wavenumbers(a.shape[-1]) * convolve(a, b)


def b_nonlinearity(f, g) -> SpectralField | DeathState:
    for x in (f, g):
        if isinstance(x, DeathState):
            return x
    if f.cutoff != g.cutoff:
        raise ConfigurationError("cutoff mismatch in product")
    same = f is g
    tag = f.time_tag if f.time_tag == g.time_tag else None
    return SpectralField(b_coeffs(f.coeffs, None if same else g.coeffs), tag)


def wick_constant(spec: OUSpec, t: float) -> float:
    """E[z_t(x)^2] = sum over 0 < |k| <= K of E|z_t(k)|^2."""
    return float(2.0 * np.sum(ou_variance(spec.q, t)))


def wick_square(field: SpectralField, spec: OUSpec, t: float):
    """(z^2 - E z^2, removed constant).  The constant only touches the zero
    mode, which products drop anyway, so it is returned as metadata."""
    if isinstance(field, DeathState):
        return field, wick_constant(spec, t)
    if field.cutoff != spec.K:
        raise ConfigurationError("field cutoff differs from the OU cutoff")
    return SpectralField(convolve(field.coeffs), field.time_tag), wick_constant(spec, t)


def j_convolve_coeffs(drift, dt: float) -> np.ndarray:
    """ETD1 heat convolution of drift nodes (axis 0); J_0 = 0."""
    drift = np.asarray(drift)
    decay, phi, _ = etd_coefficients(drift.shape[-1], dt)
    out = np.zeros_like(drift, dtype=complex)
    for m in range(1, drift.shape[0]):
        out[m] = decay * out[m - 1] + phi * drift[m - 1]
    return out


def j_convolve(drift_path: FieldPath) -> FieldPath:
    """J_t = int_0^t exp(-(t-s)A) D_s ds with the drift frozen on each step."""
    if not drift_path.alive:
        raise ConfigurationError("drift path contains DeathState nodes")
    times = drift_path.times
    if len(times) < 2:
        raise ConfigurationError("need at least two time nodes")
    steps = np.diff(times)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-9, atol=0):
        raise ConfigurationError("j_convolve needs a uniform time grid")
    J = j_convolve_coeffs(drift_path.coeff_array(), dt)
    return FieldPath(times, tuple(SpectralField(c, float(t)) for t, c in zip(times, J)))


# ---------------------------------------------------------------------------
# decay predictions and exact second moments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DecaySpec:
    """E|x(k)|^2 <~ |k|^(-power); Holder exponent kappa with power = 1 + 2 kappa."""

    power: float
    k_range: tuple = (1, np.inf)
    holder_exponent: float | None = None

    def __post_init__(self):
        kappa = (self.power - 1.0) / 2.0
        if self.holder_exponent is None:
            object.__setattr__(self, "holder_exponent", kappa)
        elif abs(self.holder_exponent - kappa) > 1e-12:
            raise ConfigurationError("power and holder_exponent are inconsistent")


def _require(cond: bool, text: str):
    if not cond:
        raise OutOfRegimeError(f"outside the validity window: requires {text}")


def predicted_power(kind: str, gamma: float, delta: float | None = None) -> float:
    """Decay power p of E|x(k)|^2 for each object, checking its window."""
    g, d = gamma, delta
    if kind == "ou":
        _require(g < 1, "gamma < 1")
        return 2 - 2 * g
    if kind == "wick2":
        _require(0.5 <= g < 0.75, "1/2 <= gamma < 3/4")
        return 3 - 4 * g
    if kind == "Jz":
        _require(0.5 <= g < 1, "1/2 <= gamma < 1")
        return 5 - 4 * g
    if kind == "JzCircZ":
        _require(0.5 <= g < 1, "1/2 <= gamma < 1")
        return 6 - 6 * g
    if d is None:
        raise ConfigurationError(f"{kind} needs a second exponent delta")
    if kind == "zz_resonant":
        _require(g + d < 1.5, "gamma + delta < 3/2")
        return 3 - 2 * g - 2 * d
    if kind == "Jzz":
        _require(1.5 <= g + d < 2, "3/2 <= gamma + delta < 2")
        return 5 - 2 * g - 2 * d
    if kind == "JzCircZdelta":
        _require(0.5 <= g < 1, "1/2 <= gamma < 1")
        _require(d < 1, "delta < 1")
        return 6 - 4 * g - 2 * d
    raise ConfigurationError(f"unknown object kind {kind!r}")


def _two_sided(v) -> np.ndarray:
    """Array indexed by k + K for k = -K..K (zero at k = 0)."""
    K = v.shape[-1]
    out = np.zeros(2 * K + 1)
    out[K + 1:] = v
    out[:K] = v[::-1]
    return out


def _pair_indices(ks, K):
    k1 = np.arange(-K, K + 1)
    k2 = np.asarray(ks)[:, None] - k1[None, :]
    ok = (k1[None, :] != 0) & (k2 != 0) & (np.abs(k2) <= K)
    return k1, k2, ok


def wick2_second_moment(q, t: float, ks, chunk: int = 64) -> np.ndarray:
    """E|(z_t^2)(k)|^2 = 2 sum_{k1 + k2 = k} v(k1) v(k2), by direct summation."""
    q = np.asarray(q, dtype=float)
    K = q.size
    v = _two_sided(ou_variance(q, t))
    ks = np.atleast_1d(ks)
    out = np.empty(ks.size)
    for s in range(0, ks.size, chunk):
        k1, k2, ok = _pair_indices(ks[s:s + chunk], K)
        prod = v[None, k1 + K] * v[np.clip(k2, -K, K) + K]
        out[s:s + chunk] = 2.0 * np.sum(np.where(ok, prod, 0.0), axis=1)
    return out


def resonant_weight(k1, k2, partition: DyadicPartition = SHARP, K: int | None = None):
    """omega(k1, k2) = sum_{|i-j| <= 1} w_i(k1) w_j(k2)."""
    k1, k2 = np.abs(np.asarray(k1)), np.abs(np.asarray(k2))
    if partition.mode == "sharp":
        b1 = np.floor(np.log2(np.maximum(k1, 1))).astype(int)
        b2 = np.floor(np.log2(np.maximum(k2, 1))).astype(int)
        return (np.abs(b1 - b2) <= 1).astype(float)
    K = K or int(max(k1.max(), k2.max()))
    _, w = partition.weights(K)
    near = w.copy()
    near[1:] += w[:-1]
    near[:-1] += w[1:]
    w1 = w[:, np.clip(k1, 1, K) - 1]
    w2 = near[:, np.clip(k2, 1, K) - 1]
    return np.sum(w1 * w2, axis=0)


def resonant_second_moment(qa, qb, t: float, ks, partition: DyadicPartition = SHARP,
                           chunk: int = 64) -> np.ndarray:
    """E|(z o z~)(k)|^2 for independent OU fields with spectra qa, qb."""
    qa, qb = np.asarray(qa, float), np.asarray(qb, float)
    K = qa.size
    va, vb = _two_sided(ou_variance(qa, t)), _two_sided(ou_variance(qb, t))
    ks = np.atleast_1d(ks)
    out = np.empty(ks.size)
    for s in range(0, ks.size, chunk):
        k1, k2, ok = _pair_indices(ks[s:s + chunk], K)
        k2c = np.clip(k2, -K, K)
        k1b = np.broadcast_to(k1, k2.shape)
        om = resonant_weight(np.where(ok, k1b, 1), np.where(ok, k2c, 1), partition, K)
        prod = va[None, k1 + K] * vb[k2c + K] * om ** 2
        out[s:s + chunk] = np.sum(np.where(ok, prod, 0.0), axis=1)
    return out


def _decayed_integral(r, c, t):
    """exp(-2ct) * int_0^t exp(r s) ds, without overflow."""
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    pos = r > 0
    out[pos] = (np.exp((r[pos] - 2 * c) * t) - np.exp(-2 * c * t)) / r[pos]
    out[~pos] = np.exp(-2 * c * t) * t * exprel(r[~pos] * t)
    return out


def _double_time_integral(a, b, c, t):
    """int_0^t int_0^t exp(-c(2t - s - s')) exp(-a|s - s'|) exp(-b(s + s')) ds ds'."""
    d = c - b
    return 2.0 / (d + a) * (_decayed_integral(2 * d, c, t) - _decayed_integral(d - a, c, t))


def jz_second_moment(q, t: float, k: int) -> float:
    """E|J(z)_t(k)|^2 for J(z)_t = int_0^t exp(-(t-s)A) d/dx (z_s^2) ds.

    Closed form in time: with C_j(s,s') = A_j (exp(-l_j|s-s'|) - exp(-l_j(s+s'))),
    A_j = q_j^2 / (2 l_j), l_j = k_j^2,

        E|J_t(k)|^2 = 2 k^2 sum_{k1+k2=k} int int exp(-k^2(2t-s-s')) C_1 C_2,

    and each of the four exponential products integrates exactly.
    """
    q = np.asarray(q, dtype=float)
    K = q.size
    k1 = np.arange(-K, K + 1)
    k2 = k - k1
    ok = (k1 != 0) & (k2 != 0) & (np.abs(k2) <= K)
    a1, a2 = np.abs(k1[ok]).astype(float), np.abs(k2[ok]).astype(float)
    l1, l2 = a1 ** 2, a2 ** 2
    A1 = q[a1.astype(int) - 1] ** 2 / (2 * l1)
    A2 = q[a2.astype(int) - 1] ** 2 / (2 * l2)
    c = float(k) ** 2
    zero = np.zeros_like(l1)
    T = (_double_time_integral(l1 + l2, zero, c, t) - _double_time_integral(l1, l2, c, t)
         - _double_time_integral(l2, l1, c, t) + _double_time_integral(zero, l1 + l2, c, t))
    return float(2.0 * c * np.sum(A1 * A2 * T))


def chaos_covariance_oracles(kind: str, params: dict, k=None):
    """Predicted decay for `kind`, plus the exact finite-K value where known.

    params: gamma, optional delta, and for exact values K and t (and q, qb
    to override the |k|^gamma spectra).  Returns (DecaySpec, value or None).
    """
    g = float(params["gamma"])
    d = params.get("delta")
    p = predicted_power(kind, g, None if d is None else float(d))
    K = params.get("K")
    spec = DecaySpec(p, (1, K if K else np.inf))
    if k is None or K is None:
        return spec, None
    t = float(params.get("t", 1.0))
    q = params.get("q")
    q = wavenumbers(K).astype(float) ** g if q is None else np.asarray(q, float)
    ks = np.atleast_1d(k)
    if kind == "ou":
        value = ou_variance(q[ks - 1], t, ks)
    elif kind == "wick2":
        value = wick2_second_moment(q, t, ks)
    elif kind == "zz_resonant":
        qb = params.get("qb")
        qb = wavenumbers(K).astype(float) ** float(d) if qb is None else np.asarray(qb, float)
        value = resonant_second_moment(q, qb, t, ks, params.get("partition", SHARP))
    elif kind == "Jz":
        value = np.array([jz_second_moment(q, t, int(kk)) for kk in ks])
    else:
        return spec, None
    return spec, (value if np.ndim(k) else float(value[0]))


# ---------------------------------------------------------------------------
# lattice sums
# ---------------------------------------------------------------------------

def convolution_sum_bruteforce(a: float, b: float, k: int, K_sum: int, mode: str = "full") -> float:
    """S(k) = sum_{k1 + k2 = k, 0 < |k_i| <= K_sum} |k1|^-a |k2|^-b, summed directly.

    mode="resonant" keeps only pairs in the same or adjacent sharp dyadic blocks.
    """
    if mode not in ("full", "resonant"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    k1 = np.arange(-K_sum, K_sum + 1)
    k2 = k - k1
    ok = (k1 != 0) & (k2 != 0) & (np.abs(k2) <= K_sum)
    k1, k2 = np.abs(k1[ok]).astype(float), np.abs(k2[ok]).astype(float)
    if mode == "resonant":
        near = np.abs(np.floor(np.log2(k1)) - np.floor(np.log2(k2))) <= 1
        k1, k2 = k1[near], k2[near]
    return float(np.sum(k1 ** (-a) * k2 ** (-b)))
