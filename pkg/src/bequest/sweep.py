"""Tabulate both pure strategies over a ``(w, t)`` lattice.

The wealth axis is shared by every time slice so that time differences
can be taken along rows; nodes above the safe level are left out.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .actuarial import ProblemSpec, safe_level
from .errors import DomainError
from .optimal import FullInsurance, LatticeBranch, Regime, WaitUntilSafe
from .strategies import eval_full, eval_wait

SWEEP_COLUMNS = ["w", "t", "phi_full", "phi_wait", "phi_full_dw", "phi_wait_dw", "tf", "t0", "safe_level"]


def worker_count() -> int:
    """Process count from ``BEQUEST_THREADS``; defaults to the CPU count."""
    raw = os.environ.get("BEQUEST_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise DomainError(f"BEQUEST_THREADS must be an integer, got {raw!r}") from exc
        return max(n, 1)
    return os.cpu_count() or 1


def pmap(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """Order-preserving map, in worker processes when more than one is allowed."""
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class SweepRow:
    w: float
    t: float
    phi_full: float
    phi_wait: float
    phi_full_dw: float
    phi_wait_dw: float
    tf: float
    t0: float  # nan when the safe level is never reached
    safe_level: float


def _slice(args) -> list[SweepRow]:
    spec, t, ws = args
    wbar = safe_level(spec, t)
    rows = []
    for w in ws:
        if w > wbar:
            break
        f = eval_full(spec, w, t)
        z = eval_wait(spec, w, t)
        t0 = math.nan if z.hit_time is None else z.hit_time
        rows.append(SweepRow(w, t, f.phi, z.phi, f.phi_w, z.phi_w, f.hit_time, t0, wbar))
    return rows


def sweep(spec: ProblemSpec, times: Iterable[float], w_points: int, workers: int | None = None) -> list[SweepRow]:
    """Both strategies on ``w = linspace(0, max safe level, w_points)`` at each time."""
    times = [float(t) for t in times]
    w_max = max(safe_level(spec, t) for t in times)
    ws = [float(w) for w in np.linspace(0.0, w_max, w_points)]
    out: list[SweepRow] = []
    for rows in pmap(_slice, [(spec, t, ws) for t in times], workers):
        out.extend(rows)
    return out


def write_sweep(fh, rows: Sequence[SweepRow]) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(SWEEP_COLUMNS)
    for r in rows:
        out.writerow([f"{getattr(r, c):.9g}" for c in SWEEP_COLUMNS])


def read_sweep(fh) -> list[SweepRow]:
    reader = csv.DictReader(fh)
    if reader.fieldnames != SWEEP_COLUMNS:
        raise DomainError(f"sweep CSV must have columns {','.join(SWEEP_COLUMNS)}")
    try:
        return [SweepRow(*(float(row[c]) for c in SWEEP_COLUMNS)) for row in reader]
    except ValueError as exc:
        raise DomainError(f"bad number in sweep CSV: {exc}") from exc


def lattice(rows: Sequence[SweepRow], candidate: str, regime: Regime | None = None):
    """Lattice arguments for :func:`bequest.optimal.vi_check_lattice`.

    ``candidate`` is ``full``, ``wait``, ``max`` (buy wherever full beats
    waiting) or ``optimal`` (the classified regime, where it is one of the
    two pure strategies).
    """
    ws = np.array(sorted({r.w for r in rows}))
    ts = np.array(sorted({r.t for r in rows}))
    wi = {w: i for i, w in enumerate(ws)}
    ti = {t: j for j, t in enumerate(ts)}
    shape = (ws.size, ts.size)
    arrs = {k: np.full(shape, np.nan) for k in ("pf", "pz", "df", "dz")}
    for r in rows:
        i, j = wi[r.w], ti[r.t]
        arrs["pf"][i, j], arrs["pz"][i, j] = r.phi_full, r.phi_wait
        arrs["df"][i, j], arrs["dz"][i, j] = r.phi_full_dw, r.phi_wait_dw
    branches = {
        "full": LatticeBranch(True, arrs["pf"], arrs["df"]),
        "wait": LatticeBranch(False, arrs["pz"], arrs["dz"]),
    }
    labels = np.full(shape, "", dtype=object)
    present = ~np.isnan(arrs["pf"])
    if candidate == "optimal":
        if isinstance(regime, WaitUntilSafe):
            candidate = "wait"
        elif isinstance(regime, FullInsurance):
            candidate = "full"
        else:
            raise DomainError(f"regime {regime!r} is not a pure strategy; check it in-process instead")
    if candidate in ("full", "wait"):
        labels[present] = candidate
    elif candidate == "max":
        labels[present & (arrs["pf"] > arrs["pz"])] = "full"
        labels[present & ~(arrs["pf"] > arrs["pz"])] = "wait"
    else:
        raise DomainError(f"unknown lattice candidate {candidate!r}")
    return ws, ts, branches, labels
