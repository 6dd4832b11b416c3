import math

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from bequest.actuarial import ProblemSpec, QuadratureConfig, safe_level, term_apv, truncation_horizon
from bequest.errors import DomainError
from bequest.mortality import ConstantForce, DeMoivre, GammaTwo, LinearPdf, Tabulated

SPECS = [
    ProblemSpec(ConstantForce(0.05), 0.02),
    ProblemSpec(ConstantForce(0.03), 0.04, 0.5),
    ProblemSpec(DeMoivre(100.0), 0.02),
    ProblemSpec(GammaTwo(0.05), 0.02),
    ProblemSpec(GammaTwo(0.05), 0.03, 0.25),
    ProblemSpec(LinearPdf(0.02, 60.0), 0.02),
    ProblemSpec(Tabulated((0.0, 10.0, 30.0), (0.01, 0.02, 0.05)), 0.03, 0.1),
]


def direct_apv(spec, t, n, loaded=True):
    """Density-form oracle: int k(s) exp(-int (r + k)) ds."""
    m = 1.0 + spec.theta if loaded else 1.0
    law = spec.law
    end = min(t + n, law.horizon if math.isfinite(law.horizon) else t + 2000.0)

    def f(s):
        return m * law.hazard(s) * law.survival(t, s) ** m * math.exp(-spec.r * (s - t))

    pts = [b for b in law.breakpoints if t < b < end]
    val, _ = integrate.quad(f, t, end * (1 - 1e-14) if math.isfinite(law.horizon) and end == law.horizon else end,
                            points=pts or None, limit=500, epsabs=1e-13, epsrel=1e-12)
    return val


def test_constant_force_safe_level():
    spec = ProblemSpec(ConstantForce(0.05), 0.02)
    assert safe_level(spec, 0.0) == pytest.approx(0.05 / 0.07, rel=1e-9)
    loaded = ProblemSpec(ConstantForce(0.05), 0.02, 0.5)
    assert safe_level(loaded, 10.0) == pytest.approx(0.075 / 0.095, rel=1e-9)


def test_gamma_safe_level_closed_form():
    spec = ProblemSpec(GammaTwo(0.05), 0.02)
    assert safe_level(spec, 0.0) == pytest.approx(0.0025 / 0.07**2, rel=1e-9)


def test_zero_interest_safe_level_is_one():
    for law in [ConstantForce(0.05), GammaTwo(0.05), DeMoivre(80.0)]:
        assert safe_level(ProblemSpec(law, 0.0), 3.0) == 1.0
        assert safe_level(ProblemSpec(law, 0.0, 1.0), 3.0) == 1.0


def test_demoivre_whole_life_unloaded():
    spec = ProblemSpec(DeMoivre(100.0), 0.02)
    assert term_apv(spec, 50.0, 50.0, loaded=False) == pytest.approx(1 - math.exp(-1.0), rel=1e-8)
    # loaded with theta = 0 is the same law
    assert safe_level(spec, 50.0) == pytest.approx(1 - math.exp(-1.0), rel=1e-8)


def test_constant_force_term():
    spec = ProblemSpec(ConstantForce(0.05), 0.02)
    n = -math.log(0.3) / 0.07
    closed = 0.05 / 0.07 * (1 - math.exp(-0.07 * n))
    assert term_apv(spec, 12.0, n) == pytest.approx(closed, rel=1e-9)
    assert term_apv(spec, 0.0, n) == pytest.approx(0.5, rel=1e-9)


def test_zero_term():
    assert term_apv(SPECS[3], 5.0, 0.0) == 0.0


def test_negative_term_rejected():
    with pytest.raises(DomainError):
        term_apv(SPECS[0], 0.0, -1.0)
    with pytest.raises(DomainError):
        term_apv(SPECS[2], 100.0, 1.0)


@pytest.mark.parametrize("spec", SPECS, ids=repr)
@pytest.mark.parametrize("t,n", [(0.0, 5.0), (3.0, 25.0), (10.0, math.inf)])
def test_matches_density_form(spec, t, n):
    for loaded in (True, False):
        assert term_apv(spec, t, n, loaded) == pytest.approx(direct_apv(spec, t, n, loaded), rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=repr)
def test_safe_level_ode(spec):
    h = 1e-3
    for t in [1.0, 12.5, 31.0]:
        d = (safe_level(spec, t + h) - safe_level(spec, t - h)) / (2 * h)
        hz = spec.premium_rate(t)
        assert d == pytest.approx((spec.r + hz) * safe_level(spec, t) - hz, abs=1e-6)


@pytest.mark.parametrize("spec", SPECS, ids=repr)
@given(a=st.floats(0.0, 80.0), b=st.floats(0.0, 80.0), t=st.floats(0.0, 40.0))
def test_term_apv_bounds_and_monotone(spec, a, b, t):
    n1, n2 = sorted((a, b))
    if math.isfinite(spec.horizon):
        n1, n2 = min(n1, spec.horizon - t), min(n2, spec.horizon - t)
    x1, x2 = term_apv(spec, t, n1), term_apv(spec, t, n2)
    assert 0.0 <= x1 <= x2 + 1e-12
    assert x2 <= safe_level(spec, t) + 1e-12 <= 1.0 + 1e-12


@given(theta=st.floats(0.0, 2.0), dt=st.floats(0.0, 1.0), t=st.floats(0.0, 50.0))
def test_safe_level_increases_with_loading(theta, dt, t):
    law = GammaTwo(0.05)
    lo = safe_level(ProblemSpec(law, 0.02, theta), t)
    hi = safe_level(ProblemSpec(law, 0.02, theta + dt), t)
    assert lo <= hi + 1e-12


def test_truncation_horizon_level():
    spec = ProblemSpec(GammaTwo(0.05), 0.02)
    s = truncation_horizon(spec, 10.0)
    assert spec.discount_survival(10.0, s) == pytest.approx(1e-12, rel=1e-6)
    assert truncation_horizon(SPECS[2], 10.0) == 100.0


def test_quadrature_config_validation():
    with pytest.raises(DomainError):
        QuadratureConfig(abs_tol=0.0)
    tight = QuadratureConfig(abs_tol=1e-12, rel_tol=1e-11)
    assert safe_level(SPECS[3], 0.0, tight) == pytest.approx(0.0025 / 0.07**2, rel=1e-11)


def test_spec_validation():
    with pytest.raises(DomainError):
        ProblemSpec(GammaTwo(0.05), -0.01)
    with pytest.raises(DomainError):
        ProblemSpec(GammaTwo(0.05), 0.01, -0.5)
