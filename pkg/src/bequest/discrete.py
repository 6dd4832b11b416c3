"""Discrete-time insurance purchase by backward induction.

Each period the individual either waits or buys the one-period term cover
that lifts end-of-period wealth to 1 on death.  Wealth evolves
deterministically given the action sequence, so the recursion is solved
exactly on the reachable wealth tree.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Sequence

from .errors import DomainError

MAX_ORACLE_PERIODS = 24


@dataclass(frozen=True)
class DiscreteMortality:
    """One-period death probabilities ``q[k]``; the last one must be 1."""

    q: tuple[float, ...]

    def __post_init__(self):
        q = tuple(float(x) for x in self.q)
        object.__setattr__(self, "q", q)
        if not q:
            raise DomainError("need at least one period")
        if any(not 0.0 <= x <= 1.0 for x in q):
            raise DomainError("death probabilities must lie in [0, 1]")
        if q[-1] != 1.0:
            raise DomainError(f"last death probability must be exactly 1, got {q[-1]}")

    @property
    def periods(self) -> int:
        return len(self.q)


@dataclass(frozen=True)
class DiscreteSpec:
    mortality: DiscreteMortality
    i: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.i >= 0:
            raise DomainError(f"interest rate must be >= 0, got {self.i}")
        if not self.theta >= 0:
            raise DomainError(f"loading must be >= 0, got {self.theta}")

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteSpec":
        try:
            return cls(DiscreteMortality(tuple(data["q"])), float(data["i"]), float(data.get("theta", 0.0)))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"discrete spec needs 'q' and 'i': {exc}") from exc

    @classmethod
    def from_json(cls, path) -> "DiscreteSpec":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise DomainError(f"cannot load discrete spec {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise DomainError("discrete spec must be a JSON object")
        return cls.from_dict(data)

    @property
    def periods(self) -> int:
        return self.mortality.periods

    @property
    def v(self) -> float:
        return 1.0 / (1.0 + self.i)

    def q(self, k: int) -> float:
        return self.mortality.q[k]

    def q_loaded(self, k: int) -> float:
        return min((1.0 + self.theta) * self.mortality.q[k], 1.0)


def benefit(spec: DiscreteSpec, w: float, k: int) -> float:
    """Death benefit that makes end-of-period wealth exactly 1 on death."""
    qt = spec.q_loaded(k)
    if qt >= 1.0:
        raise DomainError(f"loaded death probability is 1 in period {k}; the benefit is undefined")
    return (1.0 - (1.0 + spec.i) * w) / (1.0 - qt)


def _after_buy(spec: DiscreteSpec, w: float, k: int) -> float:
    """Surviving end-of-period wealth after buying the funding cover."""
    qt = spec.q_loaded(k)
    return (w * (1.0 + spec.i) - qt) / (1.0 - qt)


def _check_k(spec, k):
    if not 0 <= k < spec.periods:
        raise DomainError(f"period index must be in [0, {spec.periods - 1}], got {k}")


def _solver(spec: DiscreteSpec):
    N, v, g = spec.periods, spec.v, 1.0 + spec.i

    @lru_cache(maxsize=None)
    def branches(w: float, k: int) -> tuple[float, float]:
        """(wait, buy) values at a live node."""
        q = spec.q(k)
        p = 1.0 - q
        if k == N - 1:
            hit = 1.0 if w >= v else 0.0
            return hit, hit
        # waiting still succeeds on death if accumulated wealth reaches 1
        wait = (q if w >= v else 0.0) + p * phi(w * g, k + 1)
        if spec.q_loaded(k) >= 1.0:
            buy = wait
        else:
            buy = q + p * phi(_after_buy(spec, w, k), k + 1)
        return wait, buy

    def phi(w: float, k: int) -> float:
        if w < 0.0:
            return 0.0
        return max(branches(w, k))

    return phi, branches


def dp_value(spec: DiscreteSpec, w: float, k: int = 0) -> float:
    """Maximal probability of leaving 1 at death, from wealth ``w`` at period ``k``."""
    _check_k(spec, k)
    return _solver(spec)[0](float(w), k)


@dataclass(frozen=True)
class PolicyRow:
    k: int
    wealth: float
    action: str
    value: float
    tie: bool


@dataclass
class PolicyTable:
    rows: list[PolicyRow] = field(default_factory=list)

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(r.action for r in self.rows)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_policy_rows(fh, self.rows)


def write_policy_rows(fh, rows: Sequence[PolicyRow]) -> None:
    out = csv.writer(fh, lineterminator="\n")
    out.writerow(["k", "wealth", "action", "value", "tie"])
    for r in rows:
        out.writerow([r.k, f"{r.wealth:.9g}", r.action, f"{r.value:.9g}", str(r.tie).lower()])


def dp_policy_path(spec: DiscreteSpec, w0: float) -> PolicyTable:
    """Optimal actions along the surviving wealth path from ``(w0, 0)``.

    Ties go to waiting and are flagged.  The path stops early if wealth
    becomes negative (ruin).
    """
    phi, branches = _solver(spec)
    table = PolicyTable()
    w = float(w0)
    for k in range(spec.periods):
        if w < 0.0:
            break
        wait, buy = branches(w, k)
        action = "buy" if buy > wait else "wait"
        table.rows.append(PolicyRow(k, w, action, max(wait, buy), buy == wait))
        if k == spec.periods - 1:
            break
        if action == "wait" or spec.q_loaded(k) >= 1.0:
            w = w * (1.0 + spec.i)
        else:
            w = _after_buy(spec, w, k)
    return table


def sequence_value(spec: DiscreteSpec, w0: float, actions: Sequence[str]) -> float:
    """Exact success probability of a fixed action sequence.

    A death in a waiting period succeeds iff the period's wealth is at
    least ``v``; a death in a buying period always succeeds, except under a
    clamped loaded probability where the cover is actuarially neutral and
    the period behaves like waiting.
    Negative wealth at a surviving node ends the game.  Evaluated
    innermost period first so the arithmetic matches the recursion.
    """
    N, v, g = spec.periods, spec.v, 1.0 + spec.i
    if len(actions) != N:
        raise DomainError(f"need {N} actions, got {len(actions)}")
    wealth = []
    w = float(w0)
    for k in range(N):
        wealth.append(w)
        if w < 0.0:
            break
        if actions[k] == "buy" and spec.q_loaded(k) < 1.0:
            w = _after_buy(spec, w, k)
        else:
            w = w * g
    value = 0.0
    for k in range(len(wealth) - 1, -1, -1):
        w = wealth[k]
        if w < 0.0:
            value = 0.0
            continue
        q = spec.q(k)
        hit = 1.0 if w >= v else 0.0
        if k == N - 1:
            value = hit
        elif actions[k] == "buy" and spec.q_loaded(k) < 1.0:
            value = q + (1.0 - q) * value
        else:
            value = (q if hit else 0.0) + (1.0 - q) * value
    return value


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmax: tuple[tuple[str, ...], ...]


def enumerate_oracle(spec: DiscreteSpec, w0: float) -> OracleResult:
    """Best value over all ``2^N`` action sequences, with every maximiser."""
    N = spec.periods
    if N > MAX_ORACLE_PERIODS:
        raise DomainError(f"enumeration limited to {MAX_ORACLE_PERIODS} periods, got {N}")
    best, arg = -1.0, []
    for seq in itertools.product(("wait", "buy"), repeat=N):
        val = sequence_value(spec, w0, seq)
        if val > best:
            best, arg = val, [seq]
        elif val == best:
            arg.append(seq)
    return OracleResult(best, tuple(arg))
