"""Actuarial present values under the premium-loaded law.

Premiums are charged at ``h(t) = (1 + theta) * lambda(t)`` per unit of
death benefit.  The loaded law treats ``h`` as a force of mortality, so the
loaded survival factor is ``survival(t, s) ** (1 + theta)``.

Term APVs are evaluated through the integration-by-parts identity

    int_t^{t+n} m lam(s) X(s) ds = 1 - X(t+n) - r int_t^{t+n} X(s) ds,
    X(s) = exp(-m H(t, s) - r (s - t)),

where ``m`` is 1 or ``1 + theta``.  The right-hand integrand is bounded and
smooth wherever the hazard is, including near the horizon of a
finite-horizon law.  With ``r = 0`` the identity is exact without quadrature.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

from scipy import integrate, optimize

from .errors import DomainError, NumericalError
from .mortality import MortalityLaw

# survival factor below which infinite horizons are cut off
TRUNCATION = 1e-12
FINITE_CAP = 1e-9


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0 and self.max_subdivisions >= 1):
            raise DomainError("quadrature tolerances must be positive")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class ProblemSpec:
    """Mortality law, force of interest ``r`` and premium loading ``theta``.

    The bequest goal is normalized to one unit of wealth.
    """

    law: MortalityLaw
    r: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.r >= 0:
            raise DomainError(f"force of interest must be >= 0, got {self.r}")
        if not self.theta >= 0:
            raise DomainError(f"premium loading must be >= 0, got {self.theta}")

    @property
    def horizon(self) -> float:
        return self.law.horizon

    def premium_rate(self, t: float) -> float:
        return (1.0 + self.theta) * self.law.hazard(t)

    def discount_survival(self, t: float, s: float, loaded: bool = True) -> float:
        """``exp(-int_t^s (r + k))`` with ``k = h`` if loaded else ``lambda``."""
        m = 1.0 + self.theta if loaded else 1.0
        H = self.law.cumulative_hazard(t, s)
        return math.exp(-(m * H + self.r * (s - t)))


def truncation_horizon(spec: ProblemSpec, t: float, loaded: bool = True) -> float:
    """Time beyond which the discounted survival factor from ``t`` is negligible.

    Finite-horizon laws return their horizon.  For infinite horizons this is
    where ``discount_survival(t, s)`` drops to ``TRUNCATION``.
    """
    T = spec.horizon
    if math.isfinite(T):
        return T
    m = 1.0 + spec.theta if loaded else 1.0
    level = -math.log(TRUNCATION)
    law = spec.law

    def excess(s):
        return m * law._cumulative(t, s) + spec.r * (s - t) - level

    rate = spec.r + m * law._hazard(t)
    # hazard is non-decreasing, so the exponent grows at least at `rate`
    hi = t + level / rate if rate > 0 else t + 1.0
    while excess(hi) < 0:
        hi = t + 2.0 * (hi - t)
        if hi - t > 1e12:
            raise NumericalError("discounted survival does not decay; the law may be improper")
    return optimize.brentq(excess, t, hi, xtol=1e-10)


def _annuity(spec: ProblemSpec, t: float, s: float, m: float, quad: QuadratureConfig) -> float:
    """``int_t^s exp(-m H(t, u) - r (u - t)) du``."""
    law, r = spec.law, spec.r

    def integrand(u):
        return math.exp(-(m * law._cumulative(t, u) + r * (u - t)))

    points = [b for b in law.breakpoints if t < b < s] or None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err, *rest = integrate.quad(
            integrand,
            t,
            s,
            epsabs=quad.abs_tol,
            epsrel=quad.rel_tol,
            limit=quad.max_subdivisions,
            points=points,
            full_output=1,
        )
    tol = max(quad.abs_tol, quad.rel_tol * abs(val))
    if len(rest) > 1 and err > 10 * tol:
        raise NumericalError(
            f"quadrature on [{t}, {s}] did not converge: estimate {val}, error {err}, {rest[1]}"
        )
    return val


def term_apv(
    spec: ProblemSpec,
    t: float,
    n: float,
    loaded: bool = True,
    quad: QuadratureConfig = DEFAULT_QUAD,
) -> float:
    """APV at ``t`` of a unit benefit payable on death within ``n`` time units.

    ``loaded`` selects the premium law ``h``; otherwise the plain hazard is
    used.  ``n = inf`` (or any ``t + n`` past the horizon) gives the
    whole-life value.
    """
    T = spec.horizon
    if not 0.0 <= t < T:
        raise DomainError(f"need 0 <= t < {T}, got t={t}")
    if not n >= 0:
        raise DomainError(f"term must be non-negative, got n={n}")
    if n == 0:
        return 0.0
    m = 1.0 + spec.theta if loaded else 1.0
    s = t + n
    if spec.r == 0.0:
        if s >= T:
            return 1.0
        return -math.expm1(-m * spec.law._cumulative(t, s))
    if s >= T:
        s = truncation_horizon(spec, t, loaded)
    tail = 0.0 if s >= T else spec.discount_survival(t, s, loaded)
    # cancellation for very short terms can leave a tiny negative
    return min(max(1.0 - tail - spec.r * _annuity(spec, t, s, m, quad), 0.0), 1.0)


@lru_cache(maxsize=65536)
def _safe_level_cached(spec: ProblemSpec, t: float, quad: QuadratureConfig) -> float:
    return term_apv(spec, t, math.inf, True, quad)


def safe_level(spec: ProblemSpec, t: float, quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Wealth at which full insurance forever guarantees the bequest.

    Equals the loaded whole-life APV at ``t``.
    """
    return _safe_level_cached(spec, float(t), quad)
