"""Choice of the number of levels and of the exponent schedule.

For forcing roughness alpha (noise spectrum q_k = |k|^alpha) the noise is
split into n + 2 independent slices: levels i = 0..n with spectra
q_{i,k} ~ |k|^(alpha_i) and a remainder slice q~_k ~ |k|^(beta_n), such that

    q_k^2 = sum_i q_{i,k}^2 + q~_k^2            (per mode, exactly).

The exponents must satisfy

    beta_n < alpha_n < ... < alpha_0 = alpha
    alpha_n < 1/2 <= alpha_{n-1}
    alpha_0 + alpha_{i-1} - alpha_i < 1          (1 <= i <= n)
    alpha_0 - beta_n < 1/2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigurationError, InfeasibleBaseError, UnsupportedRegimeError
from .spectral import wavenumbers
from .tolerances import BUDGET_RTOL

SCHEME = "equal-slack"
MIN_SLACK = 1e-12   # below this the strict inequalities are lost to rounding


def _threshold(n: int) -> float:
    return (2 * n + 1) / (2 * n + 2)


def minimal_levels_search(alpha: float, n_max: int = 100_000) -> int:
    """Least n with alpha < (2n+1)/(2n+2), by counting up (n = 0 below 1/2)."""
    if alpha >= 1:
        raise UnsupportedRegimeError("alpha >= 1 is outside the supported regime")
    if alpha < 0.5:
        return 0
    for n in range(1, n_max + 1):
        if alpha < _threshold(n):
            return n
    raise UnsupportedRegimeError(f"alpha = {alpha} needs more than {n_max} levels")


def minimal_levels(alpha: float) -> int:
    """Number of levels needed for roughness alpha (0 in the direct regime)."""
    alpha = float(alpha)
    if not alpha < 1:
        raise UnsupportedRegimeError("alpha >= 1 is outside the supported regime")
    if alpha < 0.5:
        return 0
    n = math.floor((2 * alpha - 1) / (2 * (1 - alpha))) + 1
    # the closed form can be off by one right at a threshold in floating point
    while not alpha < _threshold(n):
        n += 1
    while n > 1 and alpha < _threshold(n - 1):
        n -= 1
    return n


@dataclass(frozen=True, eq=False)
class LevelPlan:
    """Exponent schedule plus (optionally) the per-level spectra at cutoff K."""

    alpha: float
    n: int
    alphas: tuple
    beta_n: float | None
    scheme: str = SCHEME
    K: int | None = None
    level_spectra: np.ndarray | None = field(default=None, repr=False)
    remainder_spectrum: np.ndarray | None = field(default=None, repr=False)
    base_spectrum: np.ndarray | None = field(default=None, repr=False)

    @property
    def has_spectra(self) -> bool:
        return self.level_spectra is not None

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "n": self.n,
            "alphas": list(self.alphas),
            "beta_n": self.beta_n,
            "scheme": self.scheme,
            "K": self.K,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "LevelPlan":
        plan = cls(float(doc["alpha"]), int(doc["n"]), tuple(float(a) for a in doc["alphas"]),
                   None if doc.get("beta_n") is None else float(doc["beta_n"]),
                   doc.get("scheme", SCHEME))
        if doc.get("K"):
            plan = materialize_spectra(plan, int(doc["K"]))
        return plan


def plan_schedule(alpha: float, margin_policy: str = SCHEME) -> LevelPlan:
    """Equal-slack schedule.

    With L_i = (i+1) alpha - i (the lower bound forced by the level
    constraints) and slack g = (1/2 - L_n) / (2n), take alpha_i = L_i + i g and
    beta_n at the midpoint of (alpha - 1/2, alpha_n).
    """
    if margin_policy != SCHEME:
        raise ConfigurationError(f"unknown margin policy {margin_policy!r}")
    n = minimal_levels(alpha)
    alpha = float(alpha)
    if n == 0:
        return LevelPlan(alpha, 0, (alpha,), None)
    L = [(i + 1) * alpha - i for i in range(n + 1)]
    g = (0.5 - L[n]) / (2 * n)
    if g < MIN_SLACK:
        raise UnsupportedRegimeError(
            f"alpha = {alpha!r} is within rounding distance of the level threshold "
            f"{_threshold(n)!r}; the schedule slack {g:.3g} is not representable")
    alphas = (alpha,) + tuple(L[i] + i * g for i in range(1, n + 1))
    beta = 0.5 * ((alpha - 0.5) + alphas[n])
    return LevelPlan(alpha, n, alphas, beta)


def constraint_margins(plan: LevelPlan) -> dict:
    """Every constraint as a margin: positive means satisfied (strictly).

    Keys ending in "(implied)" are consequences of the others and are
    reported for information.
    """
    a, n, b = plan.alphas, plan.n, plan.beta_n
    m = {"alpha < 1": 1 - plan.alpha, "alpha_0 = alpha": -abs(a[0] - plan.alpha) if a[0] != plan.alpha else 1.0}
    if n == 0:
        return m
    for i in range(1, n + 1):
        m[f"alpha_{i} < alpha_{i-1}"] = a[i - 1] - a[i]
    m[f"beta_{n} < alpha_{n}"] = a[n] - b
    m[f"alpha_{n} < 1/2"] = 0.5 - a[n]
    if n >= 1:
        # 1/2 <= alpha_{n-1} is not strict; report margin + tiny so equality passes
        m[f"1/2 <= alpha_{n-1}"] = a[n - 1] - 0.5 + 1e-300
    for i in range(1, n + 1):
        m[f"alpha_0 + alpha_{i-1} - alpha_{i} < 1"] = 1 - (a[0] + a[i - 1] - a[i])
    m[f"alpha_0 - beta_{n} < 1/2"] = 0.5 - (a[0] - b)
    for i in range(1, n + 1):
        m[f"alpha_0 + alpha_{i-1} - alpha_{i} < 3/2 (implied)"] = 1.5 - (a[0] + a[i - 1] - a[i])
    m[f"alpha_0 - beta_{n} < 1 (implied)"] = 1 - (a[0] - b)
    return m


def validate_plan(plan: LevelPlan) -> list:
    """Names of violated constraints (empty list means the plan is admissible)."""
    bad = []
    if len(plan.alphas) != plan.n + 1:
        bad.append(f"expected {plan.n + 1} exponents, got {len(plan.alphas)}")
        return bad
    if plan.n >= 1 and plan.beta_n is None:
        bad.append("beta_n missing")
        return bad
    margins = constraint_margins(plan)
    for name, margin in margins.items():
        if name.endswith("(implied)"):
            continue
        if not margin > 0:
            bad.append(f"{name} (margin {margin:.6g})")
    # the implied constraints must follow from the primary ones
    primary_ok = not bad
    for name, margin in margins.items():
        if name.endswith("(implied)") and primary_ok and not margin > 0:
            bad.append(f"{name} fails although the primary constraints hold")
    if plan.has_spectra:
        bad.extend(_spectral_violations(plan))
    return bad


def _spectral_violations(plan: LevelPlan) -> list:
    bad = []
    q2 = plan.base_spectrum ** 2
    total = np.sum(plan.level_spectra ** 2, axis=0) + plan.remainder_spectrum ** 2
    err = np.max(np.abs(total - q2) / q2)
    if err > BUDGET_RTOL:
        bad.append(f"spectral budget off by {err:.3g} (relative)")
    if np.any(plan.level_spectra[0] <= 0):
        bad.append("residual level-0 spectrum not positive")
    return bad


def materialize_spectra(plan: LevelPlan, K: int, base_q: Callable | np.ndarray | None = None) -> LevelPlan:
    """Attach spectra: q_i = |k|^alpha_i / sqrt(n+2) for i >= 1, the remainder
    q~ = |k|^beta_n / sqrt(n+2), and level 0 takes whatever is left of q^2."""
    violations = [v for v in validate_plan(replace(plan, level_spectra=None)) if v]
    if violations:
        raise ConfigurationError("plan is not admissible: " + "; ".join(violations))
    k = wavenumbers(K).astype(float)
    if base_q is None:
        q = k ** plan.alpha
    elif callable(base_q):
        q = np.asarray(base_q(k), dtype=float)
    else:
        q = np.asarray(base_q, dtype=float)
    if q.shape != (K,) or np.any(q <= 0):
        raise ConfigurationError("base spectrum must be positive for k = 1..K")
    n = plan.n
    if n == 0:
        levels = q[None, :].copy()
        rem = np.zeros(K)
    else:
        scale = 1.0 / math.sqrt(n + 2)
        upper = np.array([scale * k ** a for a in plan.alphas[1:]])
        rem = scale * k ** plan.beta_n
        resid = q ** 2 - np.sum(upper ** 2, axis=0) - rem ** 2
        if np.any(resid <= 0):
            bad = int(np.argmax(resid <= 0)) + 1
            raise InfeasibleBaseError(f"residual spectrum q_0^2 <= 0 at k = {bad}")
        levels = np.vstack([np.sqrt(resid)[None, :], upper])
    for arr in (levels, rem, q):
        arr.setflags(write=False)
    return replace(plan, K=int(K), level_spectra=levels, remainder_spectrum=rem, base_spectrum=q)


def plan_summary(plan: LevelPlan) -> str:
    lines = [f"alpha = {plan.alpha:g}, levels n = {plan.n}"]
    if plan.n == 0:
        lines.append("direct regime: alpha < 1/2, the equation is simulated as is")
        return "\n".join(lines)
    lines.append("alphas = " + ", ".join(f"{a:.6g}" for a in plan.alphas))
    lines.append(f"beta_{plan.n} = {plan.beta_n:.6g}")
    lines.append("constraint margins:")
    for name, m in constraint_margins(plan).items():
        lines.append(f"  {name:<48s} {m:+.6g}")
    return "\n".join(lines)
