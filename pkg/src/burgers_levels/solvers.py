"""Time steppers for the direct Burgers equation and its level decompositions.

Everything is advanced with the exponential Euler (ETD1) scheme on Fourier
coefficients, the drift frozen at the left end of each step:

    v_{m+1} = e^{-dt A} v_m + phi * D(v_m) + q * sd * xi_m

where phi = (1 - e^{-k^2 dt}) / k^2 and the last term is the exact OU
increment.  The nonlinearity is B(u, v) = d/dx (u v), B(u) = B(u, u).

Two decompositions are implemented.  In both, levels i = 0..n start at 0,
level i carries the noise slice q_i and the remainder carries q~ and the
initial condition.

  x-system:    drift_i = B(X^{0,i-1}) - B(X^{0,i-2}),
               drift_R = B(X^{0,n} + R) - B(X^{0,n-1})
  frak-system: drift_i = B(Z^{0,i-1}) - B(Z^{0,i-2}),
               drift_S = B(F^{0,n} + S) - B(Z^{0,n-1})

with X^{0,i} the partial sums of the levels and Z^(i) the OU field of slice i
(Z^(i) shares the noise of level i).  The drifts telescope to the full
nonlinearity of the sum, so with coupled noise the sum of the levels and the
direct solution obey the same recursion.

Samples are advanced as a batch; noise for sample s, slice `label` comes from
NoiseStream(seed, label, s), so results do not depend on how a set of samples
is split into batches.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DiagnosticError
from .gaussian import b_coeffs, etd_coefficients
from .noise import DIRECT_LABEL, REMAINDER_LABEL, NoiseBank
from .planner import LevelPlan, materialize_spectra
from .spectral import (FieldPath, SpectralField, product_grid_size, to_grid,
                       wavenumbers)
from .tolerances import BLOWUP_THRESHOLD

SYSTEMS = ("direct", "x", "frak")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SystemConfig:
    """Everything a run needs.

    noise_scale multiplies every spectrum (0 gives deterministic Burgers).
    coupled=True drives the direct equation with the summed slices of the
    decomposition; otherwise it gets its own independent noise.
    seed_overrides maps a noise label to a different seed for that slice.
    refine = r draws every step as the exact combination of r sub-steps of
    size dt / r, so runs at dt, dt/2, dt/4 with refine 4, 2, 1 share one
    noise path.
    """

    plan: LevelPlan
    K: int
    dt: float = 1e-3
    T: float = 1.0
    u0: SpectralField | None = None
    z0: SpectralField | None = None
    blowup_threshold: float = BLOWUP_THRESHOLD
    seed: int = 0
    noise_scale: float = 1.0
    coupled: bool = True
    save_every: int | None = None
    seed_overrides: dict = field(default_factory=dict)
    refine: int = 1

    def __post_init__(self):
        K = int(self.K)
        if K < 1:
            raise ConfigurationError("K must be a positive integer")
        if not (self.dt > 0 and self.T > 0):
            raise ConfigurationError("dt and T must be positive")
        if self.dt > self.T / 10 * (1 + 1e-12):
            raise ConfigurationError("dt must not exceed T / 10")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-6 * max(1.0, steps):
            raise ConfigurationError("T must be an integer multiple of dt")
        if not self.blowup_threshold > 0:
            raise ConfigurationError("blowup_threshold must be positive")
        if self.noise_scale < 0:
            raise ConfigurationError("noise_scale must be nonnegative")
        if self.save_every is not None and int(self.save_every) < 1:
            raise ConfigurationError("save_every must be a positive integer")
        plan = self.plan
        if not plan.has_spectra or plan.K != K:
            plan = materialize_spectra(plan, K)
        object.__setattr__(self, "plan", plan)
        object.__setattr__(self, "K", K)
        u0 = SpectralField.zeros(K) if self.u0 is None else self.u0
        if u0.cutoff != K:
            raise ConfigurationError("u0 cutoff differs from K")
        object.__setattr__(self, "u0", u0)
        z0 = u0 if self.z0 is None else self.z0
        if z0.cutoff != K:
            raise ConfigurationError("z0 cutoff differs from K")
        object.__setattr__(self, "z0", z0)

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    def seed_for(self, label: int) -> int:
        return int(self.seed_overrides.get(label, self.seed))

    def to_json(self) -> dict:
        return {
            "plan": self.plan.to_json(),
            "K": self.K, "dt": self.dt, "T": self.T,
            "u0": {str(k): [c.real, c.imag] for k, c in enumerate(self.u0.coeffs, 1) if c != 0},
            "z0": {str(k): [c.real, c.imag] for k, c in enumerate(self.z0.coeffs, 1) if c != 0},
            "blowup_threshold": self.blowup_threshold, "seed": self.seed,
            "noise_scale": self.noise_scale, "coupled": self.coupled,
            "save_every": self.save_every,
            "seed_overrides": {str(k): v for k, v in self.seed_overrides.items()},
            "refine": self.refine,
        }


def _scaled_spectra(cfg: SystemConfig):
    p = cfg.plan
    s = cfg.noise_scale
    return s * np.asarray(p.level_spectra), s * np.asarray(p.remainder_spectrum), s * np.asarray(p.base_spectrum)


# ---------------------------------------------------------------------------
# batched engine
# ---------------------------------------------------------------------------

class _Deaths:
    """Blow-up bookkeeping for one watched quantity across the batch."""

    def __init__(self, B: int, K: int, threshold: float):
        self.time = np.full(B, np.nan)
        self.threshold = threshold
        self.M = product_grid_size(K)

    @property
    def alive(self):
        return np.isnan(self.time)

    def check(self, c, t):
        """Mark newly dead rows of c (B, K) at time t; dead rows become NaN."""
        live = self.alive
        bad = live & ~np.all(np.isfinite(c), axis=-1)
        # sup |u| <= 2 sum |c_k|; only rows above the threshold need the grid
        bound = 2.0 * np.sum(np.abs(np.where(np.isfinite(c), c, 0)), axis=-1)
        suspect = np.flatnonzero(live & ~bad & (bound > self.threshold))
        if suspect.size:
            sup = np.max(np.abs(to_grid(c[suspect], self.M)), axis=-1)
            bad[suspect[sup > self.threshold]] = True
        self.time[bad] = t
        c[~self.alive] = np.nan


def simulate(cfg: SystemConfig, system: str = "x", samples=range(1), record_steps=None,
             split: bool = False, direct: bool = False) -> dict:
    """Advance a batch of samples and return recorded coefficient arrays.

    system: "direct" (u only), "x" or "frak".  With direct=True the
    decomposition run also advances u on the same noise (coupled) or on its own
    noise (uncoupled).  split=True adds the eta / rho pair for the remainder.

    Returns {"times", "steps", "fields": {name: (n_rec, B, K)}, "death_times":
    {name: (B,)}}.  Field names: u; X0..Xn, R (x-system) or F0..Fn, S
    (frak-system); Z0..Zn, Zt; eta, rho; sum.
    """
    if system not in SYSTEMS:
        raise ConfigurationError(f"unknown system {system!r}")
    samples = [int(s) for s in samples]
    B, K, dt, N = len(samples), cfg.K, cfg.dt, cfg.n_steps
    n = cfg.plan.n
    if system != "direct" and n < 1:
        raise ConfigurationError("level systems need a plan with n >= 1")
    if record_steps is None:
        every = cfg.save_every or N
        record_steps = sorted(set(range(0, N + 1, every)) | {N})
    record_steps = sorted({int(m) for m in record_steps})
    if record_steps[0] < 0 or record_steps[-1] > N:
        raise ConfigurationError("record steps outside [0, T/dt]")

    decay, phi, sd = etd_coefficients(K, dt)
    q_lev, q_rem, q_base = _scaled_spectra(cfg)
    thr = cfg.blowup_threshold
    u0 = np.broadcast_to(np.asarray(cfg.u0.coeffs), (B, K)).copy()
    z0 = np.asarray(cfg.z0.coeffs)

    def bank(label):
        return NoiseBank(cfg.seed_for(label), label, samples, K, dt=dt, refine=cfg.refine)

    st = {}
    deaths = {}
    run_levels = system != "direct"
    run_direct = system == "direct" or direct
    if run_levels:
        banks = [bank(i) for i in range(n + 1)] + [bank(REMAINDER_LABEL)]
        lev = "X" if system == "x" else "F"
        rem = "R" if system == "x" else "S"
        for i in range(n + 1):
            st[f"{lev}{i}"] = np.zeros((B, K), complex)
        if system == "frak":
            for i in range(n + 1):
                st[f"Z{i}"] = np.zeros((B, K), complex)
            st["Zt"] = np.broadcast_to(z0, (B, K)).astype(complex)
        st[rem] = u0.copy()
        deaths[rem] = _Deaths(B, K, thr)
        if split:
            st["eta"] = np.zeros((B, K), complex)
            st["rho"] = u0.copy()
            deaths["rho"] = _Deaths(B, K, thr)
    if run_direct:
        st["u"] = u0.copy()
        deaths["u"] = _Deaths(B, K, thr)
        direct_bank = None if (run_levels and cfg.coupled) else bank(DIRECT_LABEL)
        if system == "direct" and cfg.coupled and n >= 1:
            # coupled direct run on its own: rebuild the summed slices
            banks = [bank(i) for i in range(n + 1)] + [bank(REMAINDER_LABEL)]
            direct_bank = None
        elif system == "direct" and cfg.coupled:
            banks = [bank(0)]
            direct_bank = None

    rec = {name: [] for name in st}
    if run_levels:
        rec["sum"] = []
    times = []

    def record(m):
        times.append(m * dt)
        for name, v in st.items():
            rec[name].append(v.copy())
        if run_levels:
            rec["sum"].append(_level_sum(st, lev, n) + st[rem])

    if 0 in record_steps:
        record(0)
    rec_set = set(record_steps)
    for m in range(N):
        t_next = (m + 1) * dt
        xi = None
        if run_levels or direct_bank is None:
            xi = [b.next() for b in banks]
        new = {}
        if run_levels:
            partial = np.cumsum(np.stack([st[f"{lev}{i}"] for i in range(n + 1)]), axis=0)
            src = partial if system == "x" else np.cumsum(
                np.stack([st[f"Z{i}"] for i in range(n + 1)]), axis=0)
            b_src = [b_coeffs(src[i]) for i in range(n)]       # B(src^{0,i}), i < n
            for i in range(n + 1):
                drift = 0.0
                if i >= 1:
                    drift = b_src[i - 1] - (b_src[i - 2] if i >= 2 else 0.0)
                new[f"{lev}{i}"] = decay * st[f"{lev}{i}"] + phi * drift + q_lev[i] * sd * xi[i]
            H = partial[n]
            tail = b_src[n - 1]
            new[rem] = decay * st[rem] + phi * (b_coeffs(H + st[rem]) - tail) + q_rem * sd * xi[n + 1]
            if system == "frak":
                for i in range(n + 1):
                    new[f"Z{i}"] = decay * st[f"Z{i}"] + q_lev[i] * sd * xi[i]
                new["Zt"] = decay * st["Zt"] + q_rem * sd * xi[n + 1]
            if split:
                eta, rho = st["eta"], st["rho"]
                drift = (b_coeffs(H) - tail + 2 * b_coeffs(H, eta) + 2 * b_coeffs(H, rho)
                         + b_coeffs(rho) + 2 * b_coeffs(rho, eta) + b_coeffs(eta))
                new["eta"] = decay * eta + q_rem * sd * xi[n + 1]
                new["rho"] = decay * rho + phi * drift
        if run_direct:
            if direct_bank is None:
                if n >= 1:
                    forcing = sum(q_lev[i] * xi[i] for i in range(n + 1)) + q_rem * xi[n + 1]
                else:
                    forcing = q_lev[0] * xi[0]
            else:
                forcing = q_base * direct_bank.next()
            u = st["u"]
            new["u"] = decay * u + phi * b_coeffs(u) + sd * forcing
        for name, d in deaths.items():
            d.check(new[name], t_next)
        # dead rows stay NaN; a dead remainder also kills rho's partner and vice versa only via data
        st.update(new)
        if m + 1 in rec_set:
            record(m + 1)

    fields = {name: np.array(v) for name, v in rec.items()}
    death_times = {name: d.time for name, d in deaths.items()}
    if run_levels:
        death_times["sum"] = death_times[rem].copy()
    return {"times": np.array(times), "steps": np.array(record_steps),
            "fields": fields, "death_times": death_times, "samples": samples}


def _level_sum(st, lev, n):
    return sum(st[f"{lev}{i}"] for i in range(n + 1))


# ---------------------------------------------------------------------------
# single-run wrappers returning FieldPaths
# ---------------------------------------------------------------------------

def _to_path(times, coeffs, death_time=None) -> FieldPath:
    death = None if death_time is None or np.isnan(death_time) else float(death_time)
    return FieldPath.from_array(times, coeffs, death)


@dataclass(frozen=True, eq=False)
class LevelRun:
    """Paths of one decomposition run on a shared time grid."""

    system: str
    levels: tuple                 # FieldPath per level 0..n
    remainder: FieldPath
    ou: tuple = ()                # Z^(0..n) (frak-system only)
    ou_remainder: FieldPath | None = None
    eta: FieldPath | None = None
    rho: FieldPath | None = None
    total: FieldPath | None = None

    @property
    def times(self):
        return self.remainder.times


def _run_levels(cfg: SystemConfig, system: str, sample: int = 0, split: bool = False) -> LevelRun:
    out = simulate(cfg, system, [sample], split=split)
    f, times, dts = out["fields"], out["times"], out["death_times"]
    n = cfg.plan.n
    lev, rem = ("X", "R") if system == "x" else ("F", "S")
    path = lambda name, death=None: _to_path(times, f[name][:, 0], death)
    rem_death = dts[rem][0]
    levels = tuple(path(f"{lev}{i}") for i in range(n + 1))
    ou = tuple(path(f"Z{i}") for i in range(n + 1)) if system == "frak" else ()
    return LevelRun(
        system=system, levels=levels, remainder=path(rem, rem_death), ou=ou,
        ou_remainder=path("Zt") if system == "frak" else None,
        eta=path("eta") if split else None,
        rho=path("rho", dts["rho"][0]) if split else None,
        total=path("sum", rem_death))


def run_direct_burgers(cfg: SystemConfig, sample: int = 0) -> FieldPath:
    """Direct solution u; driven by the summed slices when cfg.coupled."""
    out = simulate(cfg, "direct", [sample])
    return _to_path(out["times"], out["fields"]["u"][:, 0], out["death_times"]["u"][0])


def run_x_system(cfg: SystemConfig, sample: int = 0) -> LevelRun:
    return _run_levels(cfg, "x", sample)


def run_frak_system(cfg: SystemConfig, sample: int = 0) -> LevelRun:
    return _run_levels(cfg, "frak", sample)


def run_split_remainder(cfg: SystemConfig, host: str = "frak", sample: int = 0):
    """(eta, rho) for the remainder of the host system; eta + rho reproduces it."""
    if host not in ("frak", "x"):
        raise ConfigurationError("host must be 'frak' or 'x'")
    run = _run_levels(cfg, host, sample, split=True)
    return run.eta, run.rho


# ---------------------------------------------------------------------------
# fixed-point regime
# ---------------------------------------------------------------------------

def fixed_point_regime_check(gamma: float, sigma: float, sigma0: float) -> str:
    """Classify (gamma, sigma, sigma0) for the local fixed-point argument.

    gamma: regularity of the rough coefficient, sigma: solution space,
    sigma0: initial condition.  "classical" needs gamma + 1 > sigma > 0,
    sigma + gamma > 0 and sigma0 >= sigma; "weighted" needs gamma > -1/2,
    sigma > 0, sigma + gamma > 0, sigma0 > -1 and 0 < rho - sigma0 < 2 with
    rho = min(sigma, gamma + 1).
    """
    if gamma + 1 > sigma > 0 and sigma + gamma > 0 and sigma0 >= sigma:
        return "classical"
    rho = min(sigma, gamma + 1)
    if gamma > -0.5 and sigma > 0 and sigma + gamma > 0 and sigma0 > -1 and 0 < rho - sigma0 < 2:
        return "weighted"
    return "out_of_scope"


# ---------------------------------------------------------------------------
# Girsanov integrands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GirsanovReport:
    """Integrand value at the full cutoff plus a truncation sweep."""

    mode: str
    beta: float
    t: float
    value: float
    cutoffs: tuple
    values: tuple
    ratios: tuple                # value(K_j) / value(K_{j-1})
    growth_per_doubling: float   # geometric mean of the ratios

    def stable(self, tol: float) -> bool:
        return abs(self.growth_per_doubling - 1.0) <= tol


def _girsanov_weights(times, k, t, mode):
    """Per-cell, per-mode weights for the drift frozen on [s_m, s_m+1)."""
    s0, s1 = times[:-1], times[1:]
    inside = s1 <= t + 1e-12
    s0, s1 = s0[inside], s1[inside]
    h = (s1 - s0)[:, None]
    if mode == "plain":
        return np.broadcast_to(h, (len(s0), len(k))), inside
    k2 = k.astype(float)[None, :] ** 2
    # int_{s0}^{s1} exp(-2 k^2 (t - s)) ds, exact
    w = np.exp(-2 * k2 * (t - s1[:, None])) * (-np.expm1(-2 * k2 * h)) / (2 * k2)
    return w, inside


def girsanov_integrand(drift_coeffs, times, beta: float, mode: str, t: float) -> float:
    """int_0^t ||A^{-beta/2} F_s||^2 ds (plain) or with e^{-(t-s)A} inserted
    (time_shifted), F frozen on each cell; L2 norm by Parseval."""
    if mode not in ("plain", "time_shifted"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    c = np.asarray(drift_coeffs)
    K = c.shape[-1]
    k = wavenumbers(K)
    w, inside = _girsanov_weights(np.asarray(times, float), k, t, mode)
    energy = 2 * np.pi * 2 * np.abs(c[:-1][inside]) ** 2 * k.astype(float) ** (-2 * beta)
    return float(np.sum(w * energy))


def girsanov_integrand_diagnostic(drift_path: FieldPath, beta: float, mode: str = "plain",
                                  t: float | None = None) -> GirsanovReport:
    """Evaluate the integrand and re-evaluate it at truncations K/4, K/2, K."""
    times = drift_path.times
    t = float(times[-1]) if t is None else float(t)
    death = drift_path.death_time
    if death is not None and death <= t:
        raise DiagnosticError(f"drift path dies at tau = {death:g} before t = {t:g}")
    c = drift_path.coeff_array()
    K = c.shape[-1]
    cutoffs = tuple(max(1, K // 4 * m) for m in (1, 2)) + (K,) if K >= 4 else (K,)
    vals = tuple(girsanov_integrand(c[..., :Kc], times, beta, mode, t) for Kc in cutoffs)
    ratios = tuple(b / a if a > 0 else math.inf for a, b in zip(vals[:-1], vals[1:]))
    if len(vals) > 1 and vals[0] > 0:
        growth = (vals[-1] / vals[0]) ** (1.0 / (len(vals) - 1))
    else:
        growth = 1.0
    return GirsanovReport(mode, float(beta), t, vals[-1], cutoffs, vals, ratios, growth)
