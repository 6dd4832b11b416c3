"""Forces of mortality, survival probabilities, densities and death-time sampling.

All times are absolute, measured from the individual's current age ``x``.
Operations that involve two instants take them as ``(t, s)`` with
``t <= s``; none take an elapsed duration.

Infinite-horizon laws expose ``horizon == math.inf``.
"""

from __future__ import annotations

import abc
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, special

from .errors import DomainError, NumericalError

__all__ = [
    "MortalityLaw",
    "ConstantForce",
    "DeMoivre",
    "GammaTwo",
    "LinearPdf",
    "Tabulated",
]


class MortalityLaw(abc.ABC):
    """A non-decreasing hazard rate on ``[0, horizon)``.

    Subclasses implement :meth:`_hazard` and :meth:`_cumulative`; the public
    methods add domain checks on top.
    """

    @property
    def horizon(self) -> float:
        return math.inf

    @property
    @abc.abstractmethod
    def sup_hazard(self) -> float:
        """Limit of the hazard as ``t`` approaches the horizon."""

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior points where the hazard is not smooth."""
        return ()

    @abc.abstractmethod
    def _hazard(self, t: float) -> float: ...

    @abc.abstractmethod
    def _cumulative(self, t: float, s: float) -> float:
        """Integral of the hazard over ``[t, s]``; may be ``inf`` at the horizon."""

    # public surface ---------------------------------------------------------

    def hazard(self, t: float) -> float:
        if not 0.0 <= t < self.horizon:
            raise DomainError(f"hazard needs 0 <= t < {self.horizon}, got t={t}")
        return self._hazard(t)

    def cumulative_hazard(self, t: float, s: float) -> float:
        self._check_pair(t, s)
        if s == t:
            return 0.0
        return self._cumulative(t, s)

    def survival(self, t: float, s: float) -> float:
        """Probability of surviving to ``s`` given alive at ``t``."""
        return math.exp(-self.cumulative_hazard(t, s))

    def density(self, s: float) -> float:
        """Unconditional density of the death time at ``s``."""
        if not 0.0 <= s < self.horizon:
            raise DomainError(f"density needs 0 <= s < {self.horizon}, got s={s}")
        return self._hazard(s) * math.exp(-self._cumulative(0.0, s))

    def sample_death_time(self, u: float, t: float = 0.0) -> float:
        """Death time ``tau`` with ``survival(t, tau) == u``.

        Solved by a bracketed root search on the cumulative hazard, so it
        works for every law and serves as the reference for
        :meth:`sample_death_times`.
        """
        if not 0.0 < u <= 1.0:
            raise DomainError(f"uniform variate must lie in (0, 1], got {u}")
        if not 0.0 <= t < self.horizon:
            raise DomainError(f"conditioning time must lie in [0, {self.horizon}), got {t}")
        return self._root_inverse(t, -math.log(u))

    def sample_death_times(self, u, t: float = 0.0) -> np.ndarray:
        """Vectorized inverse-survival sampling conditional on being alive at ``t``."""
        u = np.asarray(u, dtype=float)
        if np.any(~((u > 0.0) & (u <= 1.0))):
            raise DomainError("uniform variates must lie in (0, 1]")
        if not 0.0 <= t < self.horizon:
            raise DomainError(f"conditioning time must lie in [0, {self.horizon}), got {t}")
        tau = self._inverse_cumulative(t, -np.log(u))
        # closed-form inverses can land a rounding error outside [t, T]
        return np.clip(tau, t, self.horizon)

    # helpers ----------------------------------------------------------------

    def _check_pair(self, t: float, s: float) -> None:
        if not (0.0 <= t <= s <= self.horizon) or (t == self.horizon and s != t):
            raise DomainError(f"need 0 <= t <= s <= {self.horizon}, got t={t}, s={s}")

    def _inverse_cumulative(self, t: float, target: np.ndarray) -> np.ndarray:
        return np.array([self._root_inverse(t, float(c)) for c in target.ravel()]).reshape(target.shape)

    def _root_inverse(self, t: float, target: float) -> float:
        if target == 0.0:
            return t
        T = self.horizon
        if math.isfinite(T):
            hi = T - (T - t) * 1e-15
            if self._cumulative(t, hi) <= target:
                return T
        else:
            step = 1.0
            hi = t + step
            while self._cumulative(t, hi) < target:
                step *= 2.0
                hi = t + step
                if step > 1e12:
                    raise NumericalError("cumulative hazard does not reach the target")
        return optimize.brentq(
            lambda s: self._cumulative(t, s) - target, t, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps
        )


@dataclass(frozen=True)
class ConstantForce(MortalityLaw):
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"constant force needs mu > 0, got {self.mu}")

    @property
    def sup_hazard(self) -> float:
        return self.mu

    def _hazard(self, t):
        return self.mu

    def _cumulative(self, t, s):
        return self.mu * (s - t)

    def _inverse_cumulative(self, t, target):
        return t + target / self.mu


@dataclass(frozen=True)
class DeMoivre(MortalityLaw):
    """Uniform death time on ``[0, T]``: hazard ``1 / (T - t)``."""

    T: float

    def __post_init__(self):
        if not 0 < self.T < math.inf:
            raise DomainError(f"DeMoivre needs a finite T > 0, got {self.T}")

    @property
    def horizon(self):
        return self.T

    @property
    def sup_hazard(self):
        return math.inf

    def _hazard(self, t):
        return 1.0 / (self.T - t)

    def _cumulative(self, t, s):
        if s >= self.T:
            return math.inf
        return math.log((self.T - t) / (self.T - s))

    def survival(self, t, s):
        self._check_pair(t, s)
        return (self.T - s) / (self.T - t) if s != t else 1.0

    def density(self, s):
        if not 0.0 <= s < self.T:
            raise DomainError(f"density needs 0 <= s < {self.T}, got s={s}")
        return 1.0 / self.T

    def _inverse_cumulative(self, t, target):
        return self.T - (self.T - t) * np.exp(-target)


@dataclass(frozen=True)
class GammaTwo(MortalityLaw):
    """Gamma(2, mu) death time: hazard ``mu**2 t / (mu t + 1)``."""

    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"GammaTwo needs mu > 0, got {self.mu}")

    @property
    def sup_hazard(self):
        return self.mu

    def _hazard(self, t):
        mu = self.mu
        return mu * mu * t / (mu * t + 1.0)

    def _cumulative(self, t, s):
        mu = self.mu
        return mu * (s - t) - math.log1p(mu * s) + math.log1p(mu * t)

    def survival(self, t, s):
        self._check_pair(t, s)
        mu = self.mu
        return (1.0 + mu * s) / (1.0 + mu * t) * math.exp(-mu * (s - t))

    def _inverse_cumulative(self, t, target):
        # (y - y0) - log(y / y0) = target with y = 1 + mu s, lower branch of Lambert W
        y0 = 1.0 + self.mu * t
        z = -y0 * np.exp(-y0 - target)
        y = -special.lambertw(z, k=-1).real
        y = np.where(target == 0, y0, y)
        for _ in range(2):
            f = (y - y0) - np.log(y / y0) - target
            fp = 1.0 - 1.0 / y
            ok = fp > 1e-6
            y = np.where(ok, y - f / np.where(ok, fp, 1.0), y)
        return (y - 1.0) / self.mu


@dataclass(frozen=True)
class LinearPdf(MortalityLaw):
    """Death-time density ``g(t) = r - 2 (r T - 1) t / T**2`` on ``[0, T]``.

    ``r`` here is a shape parameter of the law, not the force of interest.
    The hazard ``g / (1 - G)`` is checked to be non-decreasing on a
    1000-point grid.
    """

    r: float
    T: float

    def __post_init__(self):
        if not (self.r > 0 and 0 < self.T < math.inf):
            raise DomainError("LinearPdf needs r > 0 and finite T > 0")
        rT = self.r * self.T
        if not 1.0 < rT <= 2.0:
            raise DomainError(f"LinearPdf needs 1 < r*T <= 2 (proper, non-negative density), got {rT}")
        grid = np.linspace(0.0, self.T, 1001)[:-1]
        lam = np.array([self._hazard(float(x)) for x in grid])
        if np.any(np.diff(lam) < -1e-12 * np.maximum(lam[1:], 1.0)):
            raise DomainError("LinearPdf hazard is not non-decreasing")

    @property
    def _a(self):
        return (self.r * self.T - 1.0) / self.T**2

    def _surv0(self, s):
        return 1.0 - self.r * s + self._a * s * s

    @property
    def horizon(self):
        return self.T

    @property
    def sup_hazard(self):
        return math.inf

    def _hazard(self, t):
        return (self.r - 2.0 * self._a * t) / self._surv0(t)

    def _cumulative(self, t, s):
        if s >= self.T:
            return math.inf
        return math.log(self._surv0(t) / self._surv0(s))

    def density(self, s):
        if not 0.0 <= s < self.T:
            raise DomainError(f"density needs 0 <= s < {self.T}, got s={s}")
        return self.r - 2.0 * self._a * s

    def _inverse_cumulative(self, t, target):
        c = self._surv0(t) * np.exp(-target)
        a, r = self._a, self.r
        disc = np.maximum(r * r - 4.0 * a * (1.0 - c), 0.0)
        return 2.0 * (1.0 - c) / (r + np.sqrt(disc))


@dataclass(frozen=True)
class Tabulated(MortalityLaw):
    """Hazard rates given at knots, interpolated piecewise-constant or linear.

    ``extrapolation="constant"`` continues the last rate forever (horizon is
    infinite, last rate must be positive).  ``extrapolation="terminal"``
    ends the law at the last knot, where death becomes certain.
    """

    knots: tuple[float, ...]
    values: tuple[float, ...]
    interpolation: str = "constant"
    extrapolation: str = "constant"
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        values = tuple(float(v) for v in self.values)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        if len(knots) < 2 or len(knots) != len(values):
            raise DomainError("tabulated law needs at least two (t, lambda) pairs of equal length")
        if knots[0] != 0.0:
            raise DomainError("first knot must be t = 0")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        if any(not (v >= 0.0 and math.isfinite(v)) for v in values):
            raise DomainError("hazard values must be finite and non-negative")
        if any(b < a for a, b in zip(values, values[1:])):
            raise DomainError("hazard values must be non-decreasing")
        if self.interpolation not in ("constant", "linear"):
            raise DomainError(f"unknown interpolation {self.interpolation!r}")
        if self.extrapolation not in ("constant", "terminal"):
            raise DomainError(f"unknown extrapolation {self.extrapolation!r}")
        if self.extrapolation == "constant" and not values[-1] > 0:
            raise DomainError("constant extrapolation needs a positive last hazard")
        cum = [0.0]
        for j in range(len(knots) - 1):
            width = knots[j + 1] - knots[j]
            if self.interpolation == "constant":
                cum.append(cum[-1] + values[j] * width)
            else:
                cum.append(cum[-1] + 0.5 * (values[j] + values[j + 1]) * width)
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def from_csv(cls, path, interpolation="constant", extrapolation="constant") -> "Tabulated":
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["t", "lambda"]:
                raise DomainError(f"{path}: expected header 't,lambda'")
            rows = [(float(row["t"]), float(row["lambda"])) for row in reader]
        return cls(tuple(t for t, _ in rows), tuple(v for _, v in rows), interpolation, extrapolation)

    @property
    def horizon(self):
        return self.knots[-1] if self.extrapolation == "terminal" else math.inf

    @property
    def sup_hazard(self):
        return math.inf if self.extrapolation == "terminal" else self.values[-1]

    @property
    def breakpoints(self):
        return self.knots[1:-1] if self.extrapolation == "terminal" else self.knots[1:]

    def _segment(self, t):
        j = int(np.searchsorted(self.knots, t, side="right")) - 1
        return min(j, len(self.knots) - 1)

    def _hazard(self, t):
        j = self._segment(t)
        if j == len(self.knots) - 1 or self.interpolation == "constant":
            return self.values[j]
        k0, k1 = self.knots[j], self.knots[j + 1]
        v0, v1 = self.values[j], self.values[j + 1]
        return v0 + (v1 - v0) * (t - k0) / (k1 - k0)

    def _big_lambda(self, s):
        j = self._segment(s)
        x = s - self.knots[j]
        if j == len(self.knots) - 1 or self.interpolation == "constant":
            return self._cum[j] + self.values[j] * x
        v0 = self.values[j]
        slope = (self.values[j + 1] - v0) / (self.knots[j + 1] - self.knots[j])
        return self._cum[j] + v0 * x + 0.5 * slope * x * x

    def _cumulative(self, t, s):
        if s >= self.horizon:
            return math.inf
        return self._big_lambda(s) - self._big_lambda(t)

    def _inverse_cumulative(self, t, target):
        target = np.asarray(target, dtype=float)
        level = self._big_lambda(t) + target
        cum = np.asarray(self._cum)
        knots = np.asarray(self.knots)
        vals = np.asarray(self.values)
        j = np.clip(np.searchsorted(cum, level, side="right") - 1, 0, len(knots) - 1)
        rem = level - cum[j]
        v0 = vals[j]
        if self.interpolation == "constant":
            x = rem / np.where(v0 > 0, v0, 1.0)
        else:
            nxt = np.minimum(j + 1, len(knots) - 1)
            width = np.where(nxt > j, knots[nxt] - knots[j], 1.0)
            slope = np.where(nxt > j, (vals[nxt] - v0) / width, 0.0)
            denom = v0 + np.sqrt(v0 * v0 + 2.0 * slope * rem)
            x = np.where(rem > 0, 2.0 * rem / np.where(denom > 0, denom, 1.0), 0.0)
        s = np.maximum(knots[j] + x, t)
        if self.extrapolation == "terminal":
            s = np.where(level >= cum[-1], self.horizon, s)
        return s
