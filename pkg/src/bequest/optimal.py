"""Regime classification, variational-inequality checks and the buy threshold.

A candidate value function is verified numerically on a grid: wherever it
buys full insurance it must satisfy

    lam (phi - 1) = phi_t + ((r + h) w - h) phi_w,   lam - h (1 - w) phi_w >= 0,

and wherever it buys nothing

    lam phi = phi_t + r w phi_w,                      lam - h (1 - w) phi_w <= 0,

together with ``phi(0, t) = 0`` and ``phi(safe_level(t), t) = 1``.
``phi_w`` comes from the analytic strategy derivatives and ``phi_t`` from
central differences of the branch in force at each point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence, Union

import numpy as np
from scipy import optimize

from .actuarial import ProblemSpec, safe_level, truncation_horizon
from .errors import DomainError, MultipleCrossingsError, NoCrossingError
from .strategies import deferred, eval_full, eval_wait

# regimes ---------------------------------------------------------------------


@dataclass(frozen=True)
class WaitUntilSafe:
    """Hazard never exceeds the force of interest: wait for the safe level."""


@dataclass(frozen=True)
class FullInsurance:
    """Buy full insurance from now until death or ruin."""

    reason: str = ""


@dataclass(frozen=True)
class WaitThenFull:
    """Buy nothing before ``t_r`` unless safe; buy full insurance afterwards."""

    t_r: float


@dataclass(frozen=True)
class Unverified:
    """No closed-form optimum applies; use :func:`vi_check` / :func:`find_threshold`."""

    reason: str = ""


Regime = Union[WaitUntilSafe, FullInsurance, WaitThenFull, Unverified]

CLASSIFY_POINTS = 10_000


def _evidence_grid(spec: ProblemSpec) -> np.ndarray:
    T = spec.horizon
    half = CLASSIFY_POINTS // 2
    if math.isfinite(T):
        left = np.geomspace(1e-9 * T, 0.5 * T, half)
        right = T - np.geomspace(1e-9 * T, 0.5 * T, half)[::-1]
        return np.unique(np.concatenate([[0.0], left, right]))
    end = truncation_horizon(ProblemSpec(spec.law, 0.0, 0.0), 0.0)
    return np.concatenate([[0.0], np.geomspace(1e-9 * end, end, CLASSIFY_POINTS - 1)])


def classify_evidence(spec: ProblemSpec) -> dict:
    """Grid quantities used by :func:`classify`."""
    law = spec.law
    grid = _evidence_grid(spec)
    lam = np.array([law.hazard(float(s)) for s in grid])
    g = np.array([law.density(float(s)) for s in grid])
    surv = np.array([law.survival(0.0, float(s)) for s in grid])
    if not math.isfinite(spec.horizon):
        # density limit at infinity
        g_ext = np.append(g, 0.0)
        surv_ext = np.append(surv, 0.0)
    else:
        g_ext, surv_ext = g, surv
    suffix_min = np.minimum.accumulate(g_ext[::-1])[::-1]
    return {
        "grid": grid,
        "hazard": lam,
        "density": g,
        "max_hazard": max(float(lam.max()), law.sup_hazard),
        "density_margin": float(np.min(suffix_min - spec.r * surv_ext)),
        "density_nondecreasing": bool(np.all(np.diff(g) >= -1e-12 * max(g.max(), 1.0))),
    }


def classify(spec: ProblemSpec) -> Regime:
    """Which closed-form optimum, if any, is proved for this scenario."""
    ev = classify_evidence(spec)
    r, theta = spec.r, spec.theta
    if ev["max_hazard"] <= r:
        return WaitUntilSafe()
    if r == 0.0:
        return FullInsurance("r = 0")
    if theta == 0.0 and ev["density_margin"] >= 0.0:
        return FullInsurance("density at least r times survival")
    if (
        theta == 0.0
        and math.isfinite(spec.horizon)
        and ev["density_nondecreasing"]
        and spec.law.hazard(0.0) < r
    ):
        return WaitThenFull(compute_tr(spec))
    return Unverified("no closed-form regime applies")


def compute_tr(spec: ProblemSpec) -> float:
    """First time the hazard reaches ``r``; ``inf`` if it never does."""
    law, r = spec.law, spec.r
    if law.hazard(0.0) >= r:
        return 0.0
    if law.sup_hazard < r:
        return math.inf
    T = spec.horizon
    if math.isfinite(T):
        hi = T * (1.0 - 1e-15)
        if law.hazard(hi) < r:
            return math.inf
    else:
        hi = 1.0
        while law.hazard(hi) < r:
            hi *= 2.0
            if hi > 1e12:
                return math.inf
    return optimize.brentq(lambda s: law.hazard(s) - r, 0.0, hi, xtol=1e-12)


# candidates ------------------------------------------------------------------


@dataclass(frozen=True)
class Branch:
    """One smooth piece of a candidate value function.

    ``evaluate(w, t)`` returns ``(phi, phi_w)``.  ``t_range`` bounds where the
    formula may be evaluated for finite differences in ``t``.
    """

    buy: bool
    evaluate: Callable[[float, float], tuple[float, float]]
    t_range: tuple[float, float] = (0.0, math.inf)


@dataclass(frozen=True)
class Candidate:
    branches: Mapping[str, Branch]
    select: Callable[[float, float], str]
    name: str = "candidate"

    def __call__(self, w: float, t: float) -> float:
        return self.branches[self.select(w, t)].evaluate(w, t)[0]


def _full_branch(spec):
    def ev(w, t):
        e = eval_full(spec, w, t)
        return e.phi, e.phi_w

    return ev


def _wait_branch(spec):
    def ev(w, t):
        e = eval_wait(spec, w, t)
        return e.phi, e.phi_w

    return ev


def _closed_form_branch(theta):
    a = 1.0 / (1.0 + theta)

    def ev(w, t):
        return 1.0 - (1.0 - w) ** a, a * (1.0 - w) ** (a - 1.0) if w < 1 else math.inf

    return ev


def full_candidate(spec: ProblemSpec) -> Candidate:
    return Candidate({"full": Branch(True, _full_branch(spec))}, lambda w, t: "full", "full")


def wait_candidate(spec: ProblemSpec) -> Candidate:
    return Candidate({"wait": Branch(False, _wait_branch(spec))}, lambda w, t: "wait", "wait")


def optimal_candidate(spec: ProblemSpec, regime: Regime | None = None) -> Candidate:
    """Candidate optimum for a classified regime, with its action labels."""
    regime = classify(spec) if regime is None else regime
    if isinstance(regime, WaitUntilSafe):
        return wait_candidate(spec)
    if isinstance(regime, FullInsurance):
        if spec.r == 0.0:
            branch = Branch(True, _closed_form_branch(spec.theta))
            return Candidate({"closed": branch}, lambda w, t: "closed", "full-closed-form")
        return full_candidate(spec)
    if isinstance(regime, WaitThenFull):
        t_r = regime.t_r
        wbar_tr = safe_level(spec, t_r)

        def ev_deferred(w, t):
            e = deferred(spec, w, t, t_r)
            return e.phi, e.phi_w

        def select(w, t):
            if t >= t_r:
                return "full"
            return "deferred" if w <= math.exp(-spec.r * (t_r - t)) * wbar_tr else "wait"

        branches = {
            "deferred": Branch(False, ev_deferred, (0.0, t_r)),
            "wait": Branch(False, _wait_branch(spec)),
            "full": Branch(True, _full_branch(spec), (t_r, math.inf)),
        }
        return Candidate(branches, select, "wait-then-full")
    raise DomainError(f"regime {regime!r} has no closed-form candidate; use vi_check / find_threshold instead")


def composite_candidate(spec: ProblemSpec, wstar: Callable[[float], float]) -> Candidate:
    """Full insurance below ``wstar(t)``, wait above it."""
    branches = {"full": Branch(True, _full_branch(spec)), "wait": Branch(False, _wait_branch(spec))}
    return Candidate(branches, lambda w, t: "full" if w < wstar(t) else "wait", "threshold")


def phi_optimal(spec: ProblemSpec, w: float, t: float, regime: Regime | None = None) -> float:
    """Maximal probability of reaching the bequest where a proof applies."""
    regime = classify(spec) if regime is None else regime
    cand = optimal_candidate(spec, regime)
    if not 0.0 <= w <= safe_level(spec, t) + 1e-12:
        raise DomainError(f"wealth {w} outside [0, safe level] at t={t}")
    return cand(w, t)


# variational inequality ------------------------------------------------------


@dataclass(frozen=True)
class VITolerance:
    pde: float = 1e-3
    sign: float = 1e-8
    boundary: float = 1e-6
    dt: float = 1e-4


@dataclass(frozen=True)
class VIPoint:
    w: float
    t: float
    residual: float
    action: str
    sign_value: float
    violation: bool


@dataclass
class VIReport:
    points: list[VIPoint]
    pde_residual_max: float
    boundary_error_max: float
    tolerance: VITolerance
    verdict: bool = field(init=False)

    def __post_init__(self):
        self.verdict = (
            self.pde_residual_max < self.tolerance.pde
            and self.boundary_error_max < self.tolerance.boundary
            and not self.buy_condition_violations
        )

    @property
    def grid(self) -> list[tuple[float, float]]:
        return [(p.w, p.t) for p in self.points]

    @property
    def buy_condition_violations(self) -> list[tuple[float, float]]:
        return [(p.w, p.t) for p in self.points if p.violation]


def _time_derivative(branch: Branch, w, t, dt, horizon):
    lo, hi = branch.t_range
    hi = min(hi, horizon - 2 * dt)
    f = lambda s: branch.evaluate(w, s)[0]  # noqa: E731
    if t - dt >= lo and t + dt <= hi:
        return (f(t + dt) - f(t - dt)) / (2 * dt)
    if t + 2 * dt <= hi:
        return (-3 * f(t) + 4 * f(t + dt) - f(t + 2 * dt)) / (2 * dt)
    return (3 * f(t) - 4 * f(t - dt) + f(t - 2 * dt)) / (2 * dt)


def _fractions(w_points) -> np.ndarray:
    if np.isscalar(w_points):
        n = int(w_points)
        if n < 3:
            raise DomainError("wealth axis needs at least 3 points for finite differences")
        return np.linspace(0.0, 1.0, n)
    fr = np.unique(np.asarray(w_points, dtype=float))
    if fr.size < 3 or fr[0] < 0 or fr[-1] > 1:
        raise DomainError("wealth fractions must be >= 3 values in [0, 1]")
    return fr


def vi_check(
    spec: ProblemSpec,
    candidate: Candidate,
    t_grid: Sequence[float],
    w_points=101,
    tol: VITolerance = VITolerance(),
) -> VIReport:
    """Verify a candidate against the variational inequality on a grid.

    The wealth axis is given as fractions of the safe level at each time
    (an int means that many evenly spaced fractions including 0 and 1).
    The end fractions are boundary-condition checks; interior points carry
    the PDE residual and the sign condition for the labelled action.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 1:
        raise DomainError("time grid is empty")
    fractions = _fractions(w_points)
    law, r, theta = spec.law, spec.r, spec.theta
    points: list[VIPoint] = []
    res_max = 0.0
    bnd_max = 0.0
    for t in t_grid:
        t = float(t)
        wbar = safe_level(spec, t)
        lam = law.hazard(t)
        h = (1.0 + theta) * lam
        for fr in fractions:
            w = float(fr * wbar)
            name = candidate.select(w, t)
            branch = candidate.branches[name]
            if fr == 0.0 or fr == 1.0:
                phi = branch.evaluate(w if fr == 0.0 else wbar, t)[0]
                bnd_max = max(bnd_max, abs(phi - (fr == 1.0)))
                continue
            phi, phi_w = branch.evaluate(w, t)
            phi_t = _time_derivative(branch, w, t, tol.dt, spec.horizon)
            sign_value = lam - h * (1.0 - w) * phi_w
            if branch.buy:
                residual = lam * (phi - 1.0) - phi_t - ((r + h) * w - h) * phi_w
                violation = sign_value < -tol.sign
            else:
                residual = lam * phi - phi_t - r * w * phi_w
                violation = sign_value > tol.sign
            res_max = max(res_max, abs(residual))
            points.append(VIPoint(w, t, residual, "buy" if branch.buy else "wait", sign_value, violation))
    return VIReport(points, res_max, bnd_max, tol)


@dataclass(frozen=True)
class LatticeBranch:
    """Tabulated branch values on a lattice, NaN outside the region."""

    buy: bool
    phi: np.ndarray
    phi_w: np.ndarray


def vi_check_lattice(
    spec: ProblemSpec,
    w: np.ndarray,
    t: np.ndarray,
    branches: Mapping[str, LatticeBranch],
    labels: np.ndarray,
    tol: VITolerance = VITolerance(),
) -> VIReport:
    """Variational-inequality check on tabulated values over a ``(w, t)`` lattice.

    Arrays are shaped ``(len(w), len(t))`` and ``labels`` names the branch in
    force at each node.  ``phi_t`` is a central difference along the time
    axis of the labelled branch, so only interior time nodes whose
    neighbours are tabulated get checked.
    """
    w = np.asarray(w, dtype=float)
    t = np.asarray(t, dtype=float)
    if w.size < 3 or t.size < 3:
        raise DomainError("lattice needs at least 3 points per axis for finite differences")
    law, r, theta = spec.law, spec.r, spec.theta
    points: list[VIPoint] = []
    res_max = 0.0
    for j in range(1, t.size - 1):
        lam = law.hazard(float(t[j]))
        h = (1.0 + theta) * lam
        wbar = safe_level(spec, float(t[j]))
        for i in range(w.size):
            if not 0.0 < w[i] < wbar:
                continue
            name = labels[i, j]
            if not name:
                continue
            br = branches[name]
            trio = br.phi[i, j - 1 : j + 2]
            if np.any(np.isnan(trio)) or not np.isfinite(br.phi_w[i, j]):
                continue
            p, pw = float(br.phi[i, j]), float(br.phi_w[i, j])
            phi_t = (trio[2] - trio[0]) / (t[j + 1] - t[j - 1])
            sign_value = lam - h * (1.0 - w[i]) * pw
            if br.buy:
                residual = lam * (p - 1.0) - phi_t - ((r + h) * w[i] - h) * pw
                violation = sign_value < -tol.sign
            else:
                residual = lam * p - phi_t - r * w[i] * pw
                violation = sign_value > tol.sign
            res_max = max(res_max, abs(residual))
            points.append(
                VIPoint(float(w[i]), float(t[j]), float(residual), "buy" if br.buy else "wait",
                        float(sign_value), bool(violation))
            )
    if not points:
        raise DomainError("no interior lattice node has tabulated time neighbours")
    return VIReport(points, res_max, 0.0, tol)


def write_vi_report(fh, report: VIReport) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["w", "t", "residual", "action", "violation"])
    for p in report.points:
        out.writerow([f"{p.w:.9g}", f"{p.t:.9g}", f"{p.residual:.9g}", p.action, str(p.violation).lower()])


# threshold -------------------------------------------------------------------

SCAN_POINTS = 48
# wealth fractions probed when certifying a threshold slice
VALIDITY_FRACTIONS = np.unique(
    np.concatenate(
        [
            [0.0, 1.0],
            np.geomspace(1e-4, 1e-2, 9),
            np.linspace(0.0, 1.0, 51),
            1.0 - np.geomspace(1e-4, 1e-2, 9),
        ]
    )
)


@dataclass(frozen=True)
class ThresholdPoint:
    t: float
    wstar: float
    valid: bool
    report: VIReport | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ThresholdCurve:
    times: tuple[float, ...]
    wstar: tuple[float, ...]
    valid: tuple[bool, ...]

    @property
    def valid_from(self) -> float | None:
        """Earliest time from which every later slice is valid."""
        start = None
        for t, ok in zip(self.times, self.valid):
            if ok and start is None:
                start = t
            elif not ok:
                start = None
        return start

    def __call__(self, t: float) -> float:
        if not self.times[0] <= t <= self.times[-1]:
            raise DomainError(f"threshold curve covers [{self.times[0]}, {self.times[-1]}], got t={t}")
        return float(np.interp(t, self.times, self.wstar))


def _gap(spec, w, t):
    return eval_full(spec, w, t).phi - eval_wait(spec, w, t).phi


def find_crossing(spec: ProblemSpec, t: float, scan_points: int = SCAN_POINTS) -> float:
    """Unique wealth in ``(0, safe_level(t))`` where full and wait values meet."""
    wbar = safe_level(spec, t)
    ws = wbar * np.linspace(0.0, 1.0, scan_points + 1)[1:-1]
    gaps = np.array([_gap(spec, float(w), t) for w in ws])
    signs = np.sign(gaps)
    nz = signs != 0
    changes = np.flatnonzero(np.diff(signs[nz]) != 0)
    if changes.size == 0:
        raise NoCrossingError(f"full and wait values do not cross in (0, {wbar}) at t={t}")
    if changes.size > 1:
        raise MultipleCrossingsError(f"{changes.size} crossings of full and wait values at t={t}")
    idx = np.flatnonzero(nz)
    a, b = float(ws[idx[changes[0]]]), float(ws[idx[changes[0] + 1]])
    return optimize.brentq(lambda w: _gap(spec, w, t), a, b, xtol=1e-12)


def find_threshold(spec: ProblemSpec, t: float, tol: VITolerance = VITolerance()) -> ThresholdPoint:
    """Crossing ``w*(t)`` of the full and wait values, plus whether the
    composite (full below, wait above) passes the variational inequality at ``t``.
    """
    wstar = find_crossing(spec, t)
    cand = composite_candidate(spec, lambda s: wstar)
    # probe both sides of the switch as well
    at = wstar / safe_level(spec, t)
    fractions = np.concatenate([VALIDITY_FRACTIONS, [at - 1e-3, at + 1e-3]])
    report = vi_check(spec, cand, [t], fractions[(fractions >= 0) & (fractions <= 1)], tol)
    return ThresholdPoint(t, wstar, report.verdict, report)


def validity_onset(
    spec: ProblemSpec, t_start: float, t_stop: float, step: float = 0.1, tol: VITolerance = VITolerance()
) -> float | None:
    """Earliest time on the grid ``t_start, t_start + step, ..., t_stop`` from
    which every later slice verifies the threshold form.

    The grid is walked backwards from ``t_stop`` and stops at the first
    failing slice (slices without a crossing fail).  An isolated pass far
    below the onset, such as ``t = 0`` where a zero hazard makes the sign
    condition vacuous, therefore does not count.  ``None`` if ``t_stop``
    itself fails.
    """
    n = int(math.floor((t_stop - t_start) / step + 1e-9))
    onset = None
    for k in range(n, -1, -1):
        t = round(t_start + k * step, 10)
        try:
            ok = find_threshold(spec, t, tol).valid
        except NoCrossingError:
            ok = False
        if not ok:
            break
        onset = t
    return onset


def threshold_curve(spec: ProblemSpec, times: Sequence[float], tol: VITolerance = VITolerance()) -> ThresholdCurve:
    pts = [find_threshold(spec, float(t), tol) for t in times]
    return ThresholdCurve(tuple(p.t for p in pts), tuple(p.wstar for p in pts), tuple(p.valid for p in pts))


# boundary slopes -------------------------------------------------------------


@dataclass(frozen=True)
class BoundarySlopes:
    full_at_zero: float
    full_at_safe: float
    wait_at_zero: float
    wait_at_safe: float


def boundary_slopes(spec: ProblemSpec, t: float) -> BoundarySlopes:
    """Wealth derivatives of both strategies at ``w -> 0+`` and ``w -> safe_level(t)-``."""
    theta, T = spec.theta, spec.horizon
    wbar = safe_level(spec, t)
    if math.isfinite(T) and theta == 0.0:
        full_at_safe = math.exp(spec.r * (T - t))
    else:
        full_at_safe = math.inf
    wait_at_safe = math.inf if wbar >= 1.0 else 1.0 / ((1.0 + theta) * (1.0 - wbar))
    return BoundarySlopes(1.0 / (1.0 + theta), full_at_safe, 0.0, wait_at_safe)


def write_threshold_curve(fh, curve: ThresholdCurve) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["t", "wstar", "valid"])
    for t, w, ok in zip(curve.times, curve.wstar, curve.valid):
        out.writerow([f"{t:.9g}", f"{w:.9g}", str(ok).lower()])
