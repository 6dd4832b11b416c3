"""Value of the two pure purchase strategies and of deferred purchase.

*Full* insurance keeps the death benefit at ``1 - W`` until death or ruin.
*Wait* buys nothing until wealth grows to the safe level.  *Deferred*
waits until a fixed time and then buys full insurance.

Hitting times are absolute.  For infinite-horizon laws a full-insurance
ruin time beyond the truncation horizon is reported as that horizon with
``effectively_safe=True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .actuarial import FINITE_CAP, ProblemSpec, safe_level, term_apv, truncation_horizon
from .errors import DomainError, NumericalError

# wealth-units slack when comparing against the safe level
SAFE_SLACK = 1e-12
RESIDUAL_TOL = 1e-10
_RTOL = 4 * float(np.finfo(float).eps)


@dataclass(frozen=True)
class StrategyEval:
    phi: float
    phi_w: float
    hit_time: float | None
    effectively_safe: bool = False


def _check_wealth(spec: ProblemSpec, w: float, t: float) -> float:
    if not 0.0 <= t < spec.horizon:
        raise DomainError(f"need 0 <= t < {spec.horizon}, got t={t}")
    wbar = safe_level(spec, t)
    if not 0.0 <= w <= wbar + SAFE_SLACK:
        raise DomainError(f"wealth {w} outside [0, safe level {wbar}] at t={t}")
    return wbar


def _root(f, a, b, what):
    try:
        x = optimize.brentq(f, a, b, xtol=1e-12, rtol=_RTOL, maxiter=200)
    except (ValueError, RuntimeError) as exc:
        raise NumericalError(f"{what}: root bracketing failed on [{a}, {b}]: {exc}") from exc
    return x


def _solve_tf(spec: ProblemSpec, w: float, t: float) -> tuple[float, bool]:
    wbar = _check_wealth(spec, w, t)
    if w == 0.0:
        return t, False
    T = spec.horizon
    if w >= wbar:
        return (T, False) if math.isfinite(T) else (truncation_horizon(spec, t), True)
    s_max = T if math.isfinite(T) else truncation_horizon(spec, t)

    def f(s):
        return term_apv(spec, t, s - t) - w

    if f(s_max) <= 0.0:
        return (T, False) if math.isfinite(T) else (s_max, True)
    tf = _root(f, t, s_max, "ruin time")
    if abs(f(tf)) > RESIDUAL_TOL:
        raise NumericalError(f"ruin time residual {f(tf)} exceeds {RESIDUAL_TOL}")
    return tf, False


def solve_tf(spec: ProblemSpec, w: float, t: float) -> float:
    """Ruin time when buying full insurance from wealth ``w`` at time ``t``.

    Solves ``w = loaded term APV over [t, tf]``.
    """
    return _solve_tf(spec, w, t)[0]


def eval_full(spec: ProblemSpec, w: float, t: float) -> StrategyEval:
    """Success probability and its wealth derivative under full insurance."""
    tf, capped = _solve_tf(spec, w, t)
    law, theta = spec.law, spec.theta
    H = law.cumulative_hazard(t, tf)
    # at the safe level wealth is absorbed and never ruins
    phi = 1.0 if w >= safe_level(spec, t) else -math.expm1(-H)
    if math.isinf(H):
        phi_w = math.inf if theta > 0 else math.exp(spec.r * (tf - t))
    else:
        phi_w = math.exp(spec.r * (tf - t) + theta * H) / (1.0 + theta)
    return StrategyEval(phi, phi_w, tf, capped)


def solve_t0(spec: ProblemSpec, w: float, t: float) -> float | None:
    """Time at which uninsured wealth ``w e^{r(s-t)}`` reaches the safe level.

    Returns ``None`` when that never happens before the horizon (finite
    horizon with ``w < e^{-r(T-t)}``, or ``r = 0`` below the safe level),
    and ``inf`` for ``w = 0`` under an infinite horizon.
    """
    wbar = _check_wealth(spec, w, t)
    if w >= wbar:
        return t
    r, T = spec.r, spec.horizon
    if r == 0.0:
        return None
    if math.isfinite(T):
        if w < math.exp(-r * (T - t)):
            return None
        hi = T - FINITE_CAP
    else:
        if w == 0.0:
            return math.inf
        hi = t + max((math.log(wbar) - math.log(w)) / r, 1.0)

    def f(s):
        return math.exp(-r * (s - t)) * safe_level(spec, s) - w

    if math.isfinite(T):
        if f(hi) >= 0.0:
            return hi
    else:
        while f(hi) > 0.0:
            hi = t + 2.0 * (hi - t)
            if spec.law.cumulative_hazard(t, hi) > 745.0:
                # survival to the crossing underflows; treat as never reached in practice
                return hi
    t0 = _root(f, t, hi, "safe-level hitting time")
    if abs(f(t0)) > RESIDUAL_TOL:
        raise NumericalError(f"safe-level hitting time residual {f(t0)} exceeds {RESIDUAL_TOL}")
    return t0


def eval_wait(spec: ProblemSpec, w: float, t: float) -> StrategyEval:
    """Success probability when waiting uninsured until the safe level."""
    t0 = solve_t0(spec, w, t)
    if t0 is None:
        return StrategyEval(0.0, 0.0, None)
    if t0 == t:
        wbar = safe_level(spec, t)
        phi_w = math.inf if wbar >= 1.0 else 1.0 / ((1.0 + spec.theta) * (1.0 - wbar))
        return StrategyEval(1.0, phi_w, t)
    if math.isinf(t0):
        return StrategyEval(0.0, 0.0, t0)
    p = spec.law.survival(t, t0)
    gap = math.exp(-spec.r * (t0 - t)) - w
    phi_w = p / ((1.0 + spec.theta) * gap) if gap > 0 else 0.0
    return StrategyEval(p, phi_w, t0)


def deferred(spec: ProblemSpec, w: float, t: float, t_prime: float) -> StrategyEval:
    """Wait until ``t_prime``, then buy full insurance until death or ruin.

    ``phi_w`` is the analytic wealth derivative; ``hit_time`` is the ruin
    time of the full-insurance leg.
    """
    if not (0.0 <= t <= t_prime < spec.horizon):
        raise DomainError(f"need 0 <= t <= t' < {spec.horizon}, got t={t}, t'={t_prime}")
    if w < 0:
        raise DomainError(f"wealth must be non-negative, got {w}")
    grow = math.exp(spec.r * (t_prime - t))
    wd = w * grow
    wbar = safe_level(spec, t_prime)
    if wd > wbar + SAFE_SLACK:
        raise DomainError(
            f"deferred wealth {wd} exceeds the safe level {wbar} at t'={t_prime}; "
            "cap t' at the safe-level hitting time"
        )
    full = eval_full(spec, min(wd, wbar), t_prime)
    p = spec.law.survival(t, t_prime)
    return StrategyEval(p * full.phi, p * grow * full.phi_w, full.hit_time, full.effectively_safe)


def eval_deferred(spec: ProblemSpec, w: float, t: float, t_prime: float) -> float:
    """Success probability of deferring the full-insurance purchase to ``t_prime``."""
    return deferred(spec, w, t, t_prime).phi
