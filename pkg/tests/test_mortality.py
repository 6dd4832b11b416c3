import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from bequest.errors import DomainError
from bequest.mortality import ConstantForce, DeMoivre, GammaTwo, LinearPdf, Tabulated

LAWS = [
    ConstantForce(0.05),
    DeMoivre(100.0),
    GammaTwo(0.05),
    LinearPdf(0.02, 60.0),
    Tabulated((0.0, 10.0, 30.0), (0.01, 0.02, 0.05)),
    Tabulated((0.0, 10.0, 30.0), (0.01, 0.02, 0.05), interpolation="linear"),
    Tabulated((0.0, 20.0, 40.0), (0.01, 0.02, 0.04), extrapolation="terminal"),
]


def _finite_end(law):
    return law.horizon if math.isfinite(law.horizon) else 400.0


def test_gamma_survival_spot():
    law = GammaTwo(0.05)
    s = law.survival(0.0, 75.0)
    assert 0.105 <= s <= 0.118
    assert s == pytest.approx((1 + 0.05 * 75) * math.exp(-0.05 * 75), abs=1e-10)


def test_gamma_hazard_and_density():
    law = GammaTwo(0.05)
    assert law.hazard(0.0) == 0.0
    assert law.hazard(20.0) == pytest.approx(0.05**2 * 20 / (1 + 0.05 * 20))
    assert law.density(20.0) == pytest.approx(0.05**2 * 20 * math.exp(-1.0), rel=1e-12)


def test_demoivre_closed_forms():
    law = DeMoivre(100.0)
    assert law.survival(0.0, 50.0) == pytest.approx(0.5)
    assert law.hazard(60.0) == pytest.approx(1 / 40)
    for s in [0.0, 30.0, 99.9]:
        assert law.density(s) == pytest.approx(0.01)


def test_constant_force():
    law = ConstantForce(0.03)
    assert law.survival(5.0, 15.0) == pytest.approx(math.exp(-0.3))
    assert law.horizon == math.inf


def test_linear_pdf_density():
    r, T = 0.02, 60.0
    law = LinearPdf(r, T)
    t = 25.0
    G = r * t - (r * T - 1) * t**2 / T**2
    assert law.survival(0.0, t) == pytest.approx(1 - G, rel=1e-12)
    assert law.density(t) == pytest.approx(r - 2 * (r * T - 1) * t / T**2, rel=1e-12)


def test_tabulated_piecewise_constant():
    law = Tabulated((0.0, 10.0, 30.0), (0.01, 0.02, 0.05))
    assert law.cumulative_hazard(0.0, 40.0) == pytest.approx(0.1 + 0.4 + 0.5)
    assert law.cumulative_hazard(5.0, 12.0) == pytest.approx(0.05 + 0.04)
    assert law.hazard(10.0) == 0.02


def test_tabulated_linear():
    law = Tabulated((0.0, 10.0), (0.0, 0.02), interpolation="linear")
    assert law.hazard(5.0) == pytest.approx(0.01)
    assert law.cumulative_hazard(0.0, 10.0) == pytest.approx(0.1)
    # constant beyond the last knot
    assert law.cumulative_hazard(10.0, 20.0) == pytest.approx(0.2)


def test_tabulated_from_csv(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("t,lambda\n0,0.01\n10,0.03\n")
    law = Tabulated.from_csv(p)
    assert law.hazard(12.0) == 0.03


@pytest.mark.parametrize(
    "make",
    [
        lambda: ConstantForce(-0.1),
        lambda: DeMoivre(math.inf),
        lambda: LinearPdf(0.01, 60.0),
        lambda: Tabulated((1.0, 2.0), (0.1, 0.2)),
        lambda: Tabulated((0.0, 2.0), (0.2, 0.1)),
        lambda: Tabulated((0.0, 0.0), (0.1, 0.1)),
    ],
)
def test_invalid_laws(make):
    with pytest.raises(DomainError):
        make()


def test_domain_errors():
    law = GammaTwo(0.05)
    with pytest.raises(DomainError):
        law.survival(10.0, 5.0)
    with pytest.raises(DomainError):
        law.hazard(-1.0)
    with pytest.raises(DomainError):
        DeMoivre(100.0).hazard(100.0)


@pytest.mark.parametrize("law", LAWS, ids=repr)
def test_density_integrates_to_one(law):
    end = _finite_end(law)
    pts = [b for b in law.breakpoints if 0 < b < end]
    mass, _ = integrate.quad(law.density, 0.0, end * (1 - 1e-12), points=pts or None, limit=400)
    # a terminal table keeps an atom of mass at its last knot
    tail = law.survival(0.0, end * (1 - 1e-12)) if getattr(law, "extrapolation", "") == "terminal" else 0.0
    if not math.isfinite(law.horizon):
        tail = law.survival(0.0, end)
    assert mass + tail == pytest.approx(1.0, abs=1e-7)


@pytest.mark.parametrize("law", LAWS, ids=repr)
@pytest.mark.parametrize("u", [0.9, 0.5, 0.1])
def test_sampling_round_trip(law, u):
    s = law.sample_death_time(u)
    if s == law.horizon:
        # u falls inside the terminal atom
        assert law.survival(0.0, s * (1 - 1e-12)) > u
        return
    assert law.survival(0.0, s) == pytest.approx(u, abs=1e-10)


@pytest.mark.parametrize("law", LAWS, ids=repr)
def test_vectorised_sampling_matches_scalar(law):
    u = np.linspace(0.01, 1.0, 17)
    fast = law.sample_death_times(u, 3.0)
    slow = np.array([law.sample_death_time(float(x), 3.0) for x in u])
    np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-9)
    inside = fast < law.horizon
    np.testing.assert_allclose([law.survival(3.0, s) for s in fast[inside]], u[inside], atol=1e-10)


@pytest.mark.parametrize("law", LAWS, ids=repr)
@given(a=st.floats(0.0, 0.95), b=st.floats(0.0, 0.95))
def test_survival_monotone(law, a, b):
    end = _finite_end(law)
    s1, s2 = sorted((a * end, b * end))
    assert law.survival(0.0, s2) <= law.survival(0.0, s1) + 1e-15
    assert law.hazard(s1) <= law.hazard(s2) + 1e-15


@pytest.mark.parametrize("law", LAWS, ids=repr)
@given(a=st.floats(0.0, 0.9), b=st.floats(0.0, 0.9), c=st.floats(0.0, 0.9))
def test_survival_multiplicative(law, a, b, c):
    end = _finite_end(law)
    t, s, v = sorted((a * end, b * end, c * end))
    assert law.survival(t, v) == pytest.approx(law.survival(t, s) * law.survival(s, v), rel=1e-10, abs=1e-300)


def test_survival_identity():
    for law in LAWS:
        assert law.survival(7.0, 7.0) == 1.0
