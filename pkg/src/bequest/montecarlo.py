"""Monte Carlo estimates of bequest success probabilities.

Wealth never depends on the death time until death occurs, so under any
of the policies here the wealth trajectory is deterministic.  It is built
once as exact segments separated by switching events, and each sampled
death time is then scored against it.  Death times are drawn by inverse
transform from a counter-based Philox stream keyed by the seed, so path
``i`` always sees the same uniform for a given seed.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import optimize

from .actuarial import ProblemSpec, safe_level, term_apv
from .errors import DomainError
from .optimal import ThresholdCurve
from .strategies import SAFE_SLACK, solve_t0, solve_tf

SUCCESS_TOL = 1e-12
MAX_SWITCHES = 1000


@dataclass(frozen=True)
class FullUntilRuin:
    name = "full"


@dataclass(frozen=True)
class WaitUntilSafe:
    name = "wait"


@dataclass(frozen=True)
class Deferred:
    t_prime: float
    name = "deferred"


@dataclass(frozen=True)
class Threshold:
    curve: ThresholdCurve = field(repr=False)
    name = "threshold"


Policy = Union[FullUntilRuin, WaitUntilSafe, Deferred, Threshold]


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    mode: str  # "wait", "full" or "safe"
    wealth: float  # at start


@dataclass(frozen=True)
class WealthPath:
    segments: tuple[Segment, ...]
    ruin_time: float  # inf if never ruined


def full_wealth(spec: ProblemSpec, w0: float, s0: float, s: float) -> float:
    """Wealth at ``s`` under full insurance from ``(w0, s0)``."""
    if s == s0:
        return w0
    return (w0 - term_apv(spec, s0, s - s0)) / spec.discount_survival(s0, s)


def _first_crossing(f, lo, hi, knots):
    """First root of ``f`` on ``(lo, hi]`` given ``f(lo) >= 0``; ``None`` if none is seen."""
    pts = [lo] + [k for k in knots if lo < k < hi] + [hi]
    # midpoints guard against a double crossing inside a knot interval
    grid = sorted(set(pts + [0.5 * (a + b) for a, b in zip(pts, pts[1:])]))
    prev = grid[0]
    for s in grid[1:]:
        if f(s) < 0.0:
            return optimize.brentq(f, prev, s, xtol=1e-12)
        prev = s
    return None


def _threshold_path(spec, curve, w, t):
    T = spec.horizon
    if not curve.times[0] <= t <= curve.times[-1]:
        raise DomainError(f"threshold curve covers [{curve.times[0]}, {curve.times[-1]}], got t={t}")
    end = curve.times[-1]
    segs = []
    s0, w0 = t, w
    for _ in range(MAX_SWITCHES):
        if w0 >= safe_level(spec, s0) - SAFE_SLACK:
            segs.append(Segment(s0, T, "safe", w0))
            return WealthPath(tuple(segs), math.inf)
        if w0 >= curve(s0):
            t0 = solve_t0(spec, w0, s0)
            stop = min(end, T if t0 is None else t0)
            cross = _first_crossing(lambda s: w0 * math.exp(spec.r * (s - s0)) - curve(s), s0, stop, curve.times)
            if cross is None:
                if t0 is not None and t0 <= end:
                    segs.append(Segment(s0, t0, "wait", w0))
                    s0, w0 = t0, safe_level(spec, t0)
                    continue
                break
            segs.append(Segment(s0, cross, "wait", w0))
            s0, w0 = cross, curve(cross) * (1.0 - 1e-15)
        else:
            tf = solve_tf(spec, w0, s0)
            stop = min(end, tf)
            cross = _first_crossing(lambda s: curve(s) - full_wealth(spec, w0, s0, s), s0, stop, curve.times)
            if cross is None:
                if tf <= end:
                    segs.append(Segment(s0, tf, "full", w0))
                    return WealthPath(tuple(segs), tf)
                break
            segs.append(Segment(s0, cross, "full", w0))
            s0, w0 = cross, curve(cross)
    raise DomainError(f"threshold curve ends at {end} before the wealth path is absorbed")


def wealth_path(spec: ProblemSpec, policy: Policy, w: float, t: float) -> WealthPath:
    """Deterministic wealth trajectory from ``(w, t)`` under ``policy``."""
    T = spec.horizon
    if not 0.0 <= t < T:
        raise DomainError(f"need 0 <= t < {T}, got t={t}")
    wbar = safe_level(spec, t)
    if not 0.0 <= w <= wbar + SAFE_SLACK:
        raise DomainError(f"wealth {w} outside [0, safe level {wbar}] at t={t}")
    if w >= wbar and not isinstance(policy, Threshold):
        return WealthPath((Segment(t, T, "safe", w),), math.inf)
    if isinstance(policy, FullUntilRuin):
        tf = solve_tf(spec, w, t)
        return WealthPath((Segment(t, tf, "full", w),), tf)
    if isinstance(policy, WaitUntilSafe):
        t0 = solve_t0(spec, w, t)
        if t0 is None or math.isinf(t0):
            return WealthPath((Segment(t, T, "wait", w),), math.inf if w > 0 else t)
        return WealthPath((Segment(t, t0, "wait", w), Segment(t0, T, "safe", safe_level(spec, t0))), math.inf)
    if isinstance(policy, Deferred):
        tp = policy.t_prime
        if not t <= tp < T:
            raise DomainError(f"deferral time must lie in [{t}, {T}), got {tp}")
        wd = w * math.exp(spec.r * (tp - t))
        if wd > safe_level(spec, tp) + SAFE_SLACK:
            raise DomainError(f"wealth reaches the safe level before t'={tp}; use WaitUntilSafe")
        wait = Segment(t, tp, "wait", w)
        tf = solve_tf(spec, wd, tp)
        return WealthPath((wait, Segment(tp, tf, "full", wd)), tf)
    if isinstance(policy, Threshold):
        return _threshold_path(spec, policy.curve, w, t)
    raise DomainError(f"unknown policy {policy!r}")


def path_outcomes(spec: ProblemSpec, path: WealthPath, death_times: np.ndarray) -> np.ndarray:
    """Success indicator for each death time along a fixed wealth path."""
    tau = np.asarray(death_times, dtype=float)
    ok = np.zeros(tau.shape, dtype=bool)
    before_ruin = tau < path.ruin_time
    for seg in path.segments:
        inside = (tau >= seg.start) & ((tau < seg.end) | (seg.end == spec.horizon)) & before_ruin
        if seg.mode == "wait":
            wealth = seg.wealth * np.exp(spec.r * (tau[inside] - seg.start))
            ok[inside] = wealth >= 1.0 - SUCCESS_TOL
        else:
            # full cover tops wealth up to exactly 1 while solvent
            ok[inside] = True
    return ok


def uniforms(seed: int, n: int) -> np.ndarray:
    """Path uniforms on ``(0, 1]``; element ``i`` depends only on ``(seed, i)``."""
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return 1.0 - gen.random(n)


def death_times(spec: ProblemSpec, t: float, n: int, seed: int) -> np.ndarray:
    """Death times conditional on survival to ``t``."""
    return spec.law.sample_death_times(uniforms(seed, n), t)


@dataclass(frozen=True)
class SimResult:
    estimate: float
    std_error: float
    n_paths: int
    seed: int
    policy: str = ""
    w: float = math.nan
    t: float = math.nan

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def simulate(spec: ProblemSpec, policy: Policy, w: float, t: float, n: int, seed: int) -> SimResult:
    """Estimate the success probability of ``policy`` from ``(w, t)`` with ``n`` paths."""
    if n < 1:
        raise DomainError(f"need at least one path, got {n}")
    path = wealth_path(spec, policy, w, t)
    hits = path_outcomes(spec, path, death_times(spec, t, n, seed))
    p = float(hits.mean())
    return SimResult(p, math.sqrt(p * (1.0 - p) / n), n, int(seed), policy.name, float(w), float(t))


BATCH_HEADER = ["policy", "w", "t", "n", "seed", "estimate", "stderr"]


def write_batch(fh, results: Sequence[SimResult], header: bool = True) -> None:
    out = csv.writer(fh, lineterminator="\n")
    if header:
        out.writerow(BATCH_HEADER)
    for r in results:
        out.writerow([r.policy, f"{r.w:.9g}", f"{r.t:.9g}", r.n_paths, r.seed, f"{r.estimate:.9g}", f"{r.std_error:.9g}"])
