"""Fourier representation of real, mean-zero fields on the torus [0, 2*pi].

A field is stored through its coefficients c_k for k = 1..K; the negative
half is implied by reality, c_{-k} = conj(c_k), and c_0 = 0.  With this
convention the field is

    f(x) = sum_{0 < |k| <= K} c_k exp(i k x),

so cos(x) has c_1 = 1/2 and the mode "e_k" (c_k = 1) is 2 cos(kx).

Most functions here come in two flavours: array functions working on
coefficient arrays of shape (..., K), which the solvers use for batched
ensembles, and thin wrappers on SpectralField for single fields.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import fft as sfft
from scipy import stats

from .errors import ConfigurationError, DiagnosticError
from .tolerances import MIN_FIT_POINTS, MIN_FIT_SAMPLES

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# grids and transforms
# ---------------------------------------------------------------------------

def wavenumbers(K: int) -> np.ndarray:
    return np.arange(1, K + 1)


def product_grid_size(K: int) -> int:
    """Grid size for alias-free products of two band-K fields.

    The product lives on |k| <= 2K; with M points mode k + M aliases onto k,
    so M >= 3K + 1 keeps every retained mode |k| <= K exact.
    """
    return sfft.next_fast_len(3 * K + 1, real=True)


def sup_grid_size(K: int) -> int:
    """Oversampled grid used for sup-norms (4 x (2K + 1) points)."""
    return 4 * (2 * K + 1)


def to_grid(coeffs, M: int) -> np.ndarray:
    """Evaluate fields on the uniform grid x_m = 2*pi*m/M (last axis)."""
    coeffs = np.asarray(coeffs)
    K = coeffs.shape[-1]
    if M < 2 * K + 1:
        raise ConfigurationError(f"grid of {M} points cannot resolve cutoff {K}")
    spec = np.zeros(coeffs.shape[:-1] + (M // 2 + 1,), dtype=complex)
    spec[..., 1:K + 1] = coeffs * M
    return sfft.irfft(spec, n=M, axis=-1)


def from_grid(values, K: int) -> np.ndarray:
    """Coefficients c_1..c_K of real grid values; the mean is discarded."""
    values = np.asarray(values, dtype=float)
    M = values.shape[-1]
    if M < 2 * K + 1:
        raise ConfigurationError(f"grid of {M} points cannot resolve cutoff {K}")
    return sfft.rfft(values, axis=-1)[..., 1:K + 1] / M


def convolve(a, b=None) -> np.ndarray:
    """Mean-projected product of band-limited fields, truncated to K."""
    a = np.asarray(a)
    K = a.shape[-1]
    M = product_grid_size(K)
    fa = to_grid(a, M)
    if b is None:
        return from_grid(fa * fa, K)
    b = np.asarray(b)
    if b.shape[-1] != K:
        raise ConfigurationError("cutoff mismatch in product")
    return from_grid(fa * to_grid(b, M), K)


def l2_norm_coeffs(coeffs) -> np.ndarray:
    """L^2([0, 2*pi]) norm, via Parseval: ||f||^2 = 2*pi * sum_{k != 0} |c_k|^2."""
    c = np.asarray(coeffs)
    return np.sqrt(TWO_PI * 2.0 * np.sum(np.abs(c) ** 2, axis=-1))


def sup_norm_coeffs(coeffs) -> np.ndarray:
    c = np.asarray(coeffs)
    return np.max(np.abs(to_grid(c, sup_grid_size(c.shape[-1]))), axis=-1)


# ---------------------------------------------------------------------------
# field types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DeathState:
    """The absorbing state reached after blow-up.  Arithmetic keeps it dead."""

    blowup_time: float

    def __post_init__(self):
        if not self.blowup_time > 0:
            raise ConfigurationError("blow-up time must be positive")

    def _absorb(self, other):
        return self

    __add__ = __radd__ = __sub__ = __rsub__ = __mul__ = __rmul__ = _absorb

    def __neg__(self):
        return self


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Truncated Fourier coefficients c_1..c_K of a real mean-zero field."""

    coeffs: np.ndarray
    time_tag: float | None = None

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 1 or c.size == 0:
            raise ConfigurationError("coefficients must be a non-empty 1-d array")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficients; represent blow-up by DeathState")
        if self.time_tag is not None and not self.time_tag >= 0:
            raise ConfigurationError("time_tag must be nonnegative")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def cutoff(self) -> int:
        return self.coeffs.size

    @classmethod
    def zeros(cls, K: int, time_tag=None) -> "SpectralField":
        return cls(np.zeros(K, dtype=complex), time_tag)

    @classmethod
    def from_modes(cls, K: int, modes: dict, time_tag=None) -> "SpectralField":
        """Build from {k: c_k}; e.g. {1: 0.5} is cos(x)."""
        c = np.zeros(K, dtype=complex)
        for k, v in modes.items():
            if not 1 <= k <= K:
                raise ConfigurationError(f"mode {k} outside 1..{K}")
            c[k - 1] = v
        return cls(c, time_tag)

    @classmethod
    def from_grid(cls, values, K: int, time_tag=None) -> "SpectralField":
        return cls(from_grid(values, K), time_tag)

    def grid(self, M: int | None = None) -> np.ndarray:
        return to_grid(self.coeffs, M or sup_grid_size(self.cutoff))

    def l2_norm(self) -> float:
        return float(l2_norm_coeffs(self.coeffs))

    def sup_norm(self) -> float:
        return float(sup_norm_coeffs(self.coeffs))

    def with_time(self, t) -> "SpectralField":
        return SpectralField(self.coeffs, t)

    def truncate(self, K: int) -> "SpectralField":
        """Keep modes 1..K (a shorter field)."""
        if not 1 <= K <= self.cutoff:
            raise ConfigurationError(f"cannot truncate cutoff {self.cutoff} to {K}")
        return SpectralField(self.coeffs[:K], self.time_tag)

    def _combine(self, other, op):
        if isinstance(other, DeathState):
            return other
        if isinstance(other, SpectralField):
            if other.cutoff != self.cutoff:
                raise ConfigurationError("cutoff mismatch")
            return SpectralField(op(self.coeffs, other.coeffs), self.time_tag)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    __radd__ = __add__

    def __mul__(self, scalar):
        if isinstance(scalar, DeathState):
            return scalar
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented  # complex scalars would break reality
        return SpectralField(self.coeffs * scalar, self.time_tag)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(-self.coeffs, self.time_tag)

    def allclose(self, other, rtol=1e-12, atol=0.0) -> bool:
        return np.allclose(self.coeffs, other.coeffs, rtol=rtol, atol=atol)


State = SpectralField | DeathState


@dataclass(frozen=True, eq=False)
class FieldPath:
    """Fields on a time grid, absorbing into DeathState after blow-up."""

    times: np.ndarray
    states: tuple

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        states = tuple(self.states)
        if t.ndim != 1 or t.size != len(states) or t.size == 0:
            raise ConfigurationError("one state per time node is required")
        if np.any(np.diff(t) <= 0):
            raise ConfigurationError("times must be strictly increasing")
        dead = False
        for s in states:
            if isinstance(s, DeathState):
                dead = True
            elif dead:
                raise ConfigurationError("a live state follows a DeathState")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", states)

    @property
    def death_time(self) -> float | None:
        for t, s in zip(self.times, self.states):
            if isinstance(s, DeathState):
                return float(t)
        return None

    @property
    def alive(self) -> bool:
        return self.death_time is None

    def __len__(self):
        return len(self.states)

    def final(self) -> State:
        return self.states[-1]

    def coeff_array(self) -> np.ndarray:
        """(nodes, K) coefficients; dead nodes are NaN."""
        K = next(s.cutoff for s in self.states if isinstance(s, SpectralField))
        out = np.full((len(self), K), np.nan, dtype=complex)
        for m, s in enumerate(self.states):
            if isinstance(s, SpectralField):
                out[m] = s.coeffs
        return out

    @classmethod
    def from_array(cls, times, coeffs, death_time=None) -> "FieldPath":
        states = []
        for t, c in zip(times, coeffs):
            if death_time is not None and t >= death_time:
                states.append(DeathState(float(death_time)))
            else:
                states.append(SpectralField(c, float(t)))
        return cls(times, states)


# ---------------------------------------------------------------------------
# diagonal operators
# ---------------------------------------------------------------------------

def heat(t: float) -> Callable:
    """Symbol of exp(-tA), A = -d^2/dx^2."""
    return lambda k: np.exp(-np.square(k, dtype=float) * t)


def fractional_power(delta: float) -> Callable:
    """Symbol of A^delta, i.e. |k|^(2 delta)."""
    return lambda k: np.abs(k).astype(float) ** (2.0 * delta)


def derivative() -> Callable:
    return lambda k: 1j * np.asarray(k, dtype=float)


def _symbol_values(symbol, K: int) -> np.ndarray:
    k = wavenumbers(K)
    if callable(symbol):
        vals = np.asarray(symbol(k), dtype=complex)
        mirror = np.asarray(symbol(-k), dtype=complex)
        if not np.allclose(mirror, np.conj(vals), rtol=1e-12, atol=1e-300):
            raise ConfigurationError("symbol(-k) must equal conj(symbol(k))")
    else:
        vals = np.asarray(symbol, dtype=complex)
    if vals.shape != (K,):
        raise ConfigurationError("symbol must give one value per mode")
    return vals


def apply_diagonal(field: State, symbol) -> State:
    """c_k <- symbol(k) c_k.  `symbol` is a callable of k or an array."""
    if isinstance(field, DeathState):
        return field
    return SpectralField(_symbol_values(symbol, field.cutoff) * field.coeffs, field.time_tag)


def _shared_tag(f: SpectralField, g: SpectralField):
    return f.time_tag if f.time_tag == g.time_tag else None


def pointwise_product(f: State, g: State) -> State:
    """Exact (dealiased) product truncated to K, zero mode projected out."""
    if isinstance(f, DeathState):
        return f
    if isinstance(g, DeathState):
        return g
    if f.cutoff != g.cutoff:
        raise ConfigurationError("cutoff mismatch in product")
    return SpectralField(convolve(f.coeffs, g.coeffs), _shared_tag(f, g))


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks
# ---------------------------------------------------------------------------

def _smooth_step(x):
    """C-infinity function equal to 1 on x <= 1 and 0 on x >= 2."""
    x = np.asarray(x, dtype=float)

    def g(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a, b = g(2.0 - x), g(x - 1.0)
    return a / (a + b)


@dataclass(frozen=True)
class DyadicPartition:
    """Dyadic decomposition of the wavenumbers 1..K.

    sharp:  block j holds 2^j <= |k| < 2^(j+1).
    smooth: weights phi_j(k) = theta(k/2^(j+1)) - theta(k/2^j) for j >= 0 and
            theta(k) for j = -1, with theta a smooth step from 1 (on [0,1]) to
            0 (beyond 2); each k meets at most two adjacent blocks.
    """

    mode: str = "sharp"

    def __post_init__(self):
        if self.mode not in ("sharp", "smooth"):
            raise ConfigurationError(f"unknown partition mode {self.mode!r}")

    def block_of(self, k) -> np.ndarray:
        """Block index of each wavenumber (for smooth: the heaviest block)."""
        k = np.abs(np.asarray(k))
        if np.any(k < 1):
            raise ConfigurationError("the zero mode is not represented")
        if self.mode == "sharp":
            return np.floor(np.log2(k)).astype(int)
        kmax = int(np.max(k))
        js, w = self._smooth_weights(kmax)
        return js[np.argmax(w, axis=0)][k - 1]

    def _smooth_weights(self, K):
        k = wavenumbers(K).astype(float)
        rows, js = [_smooth_step(k)], [-1]
        j = 0
        while 2.0 ** j < K:
            rows.append(_smooth_step(k / 2.0 ** (j + 1)) - _smooth_step(k / 2.0 ** j))
            js.append(j)
            j += 1
        w = np.array(rows)
        keep = np.any(w > 0, axis=1)
        return np.array(js)[keep], w[keep]

    def weights(self, K: int):
        """(block indices, weights of shape (n_blocks, K)); columns sum to 1."""
        if self.mode == "sharp":
            blocks = self.block_of(wavenumbers(K))
            js = np.arange(blocks.max() + 1)
            return js, (blocks[None, :] == js[:, None]).astype(float)
        return self._smooth_weights(K)


SHARP = DyadicPartition("sharp")


def block_fields(coeffs, partition: DyadicPartition = SHARP):
    """Block indices and Delta_j coefficients, shape (n_blocks, ..., K)."""
    c = np.asarray(coeffs)
    js, w = partition.weights(c.shape[-1])
    shape = (len(js),) + (1,) * (c.ndim - 1) + (c.shape[-1],)
    return js, w.reshape(shape) * c[None]


def bony_coeffs(a, b, partition: DyadicPartition = SHARP):
    """Paraproducts and resonant part of arrays a, b (all mean-projected)."""
    a, b = np.asarray(a), np.asarray(b)
    K = a.shape[-1]
    if b.shape[-1] != K:
        raise ConfigurationError("cutoff mismatch in product")
    M = product_grid_size(K)
    js, fa = block_fields(a, partition)
    _, fb = block_fields(b, partition)
    ga, gb = to_grid(fa, M), to_grid(fb, M)
    nb = len(js)
    low_a = np.cumsum(ga, axis=0)   # low_a[j] = sum_{i <= j} Delta_i a
    low_b = np.cumsum(gb, axis=0)
    lt = np.zeros_like(ga[0])
    gt = np.zeros_like(ga[0])
    res = np.zeros_like(ga[0])
    for j in range(nb):
        if j >= 2:
            lt += low_a[j - 2] * gb[j]
            gt += ga[j] * low_b[j - 2]
        near = gb[max(j - 1, 0):j + 2].sum(axis=0)
        res += ga[j] * near
    return from_grid(lt, K), from_grid(res, K), from_grid(gt, K)


def bony_decompose(f: State, g: State, partition: DyadicPartition = SHARP):
    """Split fg into (f < g, f o g, f > g) over the dyadic blocks."""
    if isinstance(f, DeathState):
        return f, f, f
    if isinstance(g, DeathState):
        return g, g, g
    if f.cutoff != g.cutoff:
        raise ConfigurationError("cutoff mismatch in product")
    tag = _shared_tag(f, g)
    return tuple(SpectralField(c, tag) for c in bony_coeffs(f.coeffs, g.coeffs, partition))


def resonant_coeffs(a, b, partition: DyadicPartition = SHARP) -> np.ndarray:
    return bony_coeffs(a, b, partition)[1]


def block_norm_array(coeffs, partition: DyadicPartition = SHARP, norm: str = "sup"):
    """Block norms for a batch of fields: (block indices, array (..., n_blocks)).

    norm="sup" takes the maximum over the oversampled grid; norm="rms" is the
    root-mean-square of Delta_j f over the torus, i.e. the square root of the
    pointwise second moment of a spatially homogeneous field, computed
    exactly by Parseval.
    """
    c = np.asarray(coeffs)
    js, fields = block_fields(c, partition)
    if norm == "sup":
        vals = np.max(np.abs(to_grid(fields, sup_grid_size(c.shape[-1]))), axis=-1)
    elif norm == "rms":
        vals = np.sqrt(2.0 * np.sum(np.abs(fields) ** 2, axis=-1))
    else:
        raise ConfigurationError(f"unknown norm {norm!r}")
    return js, np.moveaxis(vals, 0, -1)


def block_norms(field: State, partition: DyadicPartition = SHARP, norm: str = "sup"):
    """[(j, ||Delta_j field||)] for every block touching 1..K."""
    if isinstance(field, DeathState):
        return field
    js, vals = block_norm_array(field.coeffs, partition, norm)
    return [(int(j), float(v)) for j, v in zip(js, vals)]


# ---------------------------------------------------------------------------
# regularity estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityFit:
    """Holder exponent estimate from dyadic block moments.

    The fit regresses log2 E[||Delta_j x||^2] on j; the slope is -2 kappa.
    """

    exponent: float
    stderr: float
    j_range: tuple
    r_squared: float
    n_samples: int = 0
    dropped_blocks: tuple = ()

    def __post_init__(self):
        if self.j_range[1] - self.j_range[0] < MIN_FIT_POINTS - 1:
            raise ConfigurationError("a fit needs at least four blocks")
        if self.stderr < 0:
            raise ConfigurationError("stderr must be nonnegative")

    def ci(self, z: float = 1.96):
        return (self.exponent - z * self.stderr, self.exponent + z * self.stderr)


def besov_exponent_fit(ensemble, j_range: Sequence[int] | None = None) -> RegularityFit:
    """Estimate the Holder exponent kappa from block norms across samples.

    `ensemble` is either a list of block_norms outputs (one per sample) or a
    pair (js, values) with values of shape (n_samples, n_blocks).
    """
    if isinstance(ensemble, tuple) and len(ensemble) == 2 and np.ndim(ensemble[1]) == 2:
        js, vals = np.asarray(ensemble[0]), np.asarray(ensemble[1], dtype=float)
    else:
        rows = [dict(s) for s in ensemble]
        js = np.array(sorted(set().union(*rows)))
        vals = np.array([[r.get(int(j), 0.0) for j in js] for r in rows])
    n = vals.shape[0]
    if n < MIN_FIT_SAMPLES:
        raise DiagnosticError(f"need at least {MIN_FIT_SAMPLES} samples, got {n}")
    lo, hi = (int(js.min()), int(js.max())) if j_range is None else map(int, j_range)
    sel = (js >= lo) & (js <= hi)
    m2 = np.mean(vals[:, sel] ** 2, axis=0)
    jj = js[sel]
    empty = m2 <= 0
    dropped = tuple(int(j) for j in jj[empty])
    jj, m2 = jj[~empty], m2[~empty]
    if jj.size < MIN_FIT_POINTS:
        raise DiagnosticError(
            f"only {jj.size} usable blocks in [{lo}, {hi}]; at least {MIN_FIT_POINTS} needed")
    reg = stats.linregress(jj.astype(float), np.log2(m2))
    return RegularityFit(
        exponent=float(-reg.slope / 2.0),
        stderr=float(reg.stderr / 2.0),
        j_range=(int(jj.min()), int(jj.max())),
        r_squared=float(reg.rvalue ** 2),
        n_samples=int(n),
        dropped_blocks=dropped,
    )


def blocks_in_band(k_min: int, k_max: int) -> tuple:
    """Sharp blocks lying entirely inside the wavenumber band [k_min, k_max]."""
    j_lo = int(np.ceil(np.log2(k_min)))
    j_hi = int(np.floor(np.log2(k_max + 1))) - 1
    return j_lo, j_hi


def iter_states(path: FieldPath) -> Iterable[SpectralField]:
    for s in path.states:
        if isinstance(s, SpectralField):
            yield s
