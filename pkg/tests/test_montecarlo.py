import io
import json
import math

import numpy as np
import pytest

from bequest.actuarial import ProblemSpec, safe_level
from bequest.errors import DomainError
from bequest.mortality import ConstantForce, DeMoivre, GammaTwo
from bequest.montecarlo import (
    Deferred,
    FullUntilRuin,
    Threshold,
    WaitUntilSafe,
    death_times,
    path_outcomes,
    simulate,
    uniforms,
    wealth_path,
    write_batch,
)
from bequest.optimal import ThresholdCurve, threshold_curve
from bequest.strategies import eval_full, eval_wait, solve_t0, solve_tf

GAMMA = ProblemSpec(GammaTwo(0.05), 0.02)


def within(res, value, k=3.0):
    return abs(res.estimate - value) <= k * max(res.std_error, 1e-12)


def test_uniforms_counter_based():
    u = uniforms(11, 1000)
    assert np.all((u > 0) & (u <= 1))
    np.testing.assert_array_equal(uniforms(11, 10), u[:10])
    assert not np.array_equal(uniforms(12, 10), u[:10])


def test_conditional_death_times():
    tau = death_times(GAMMA, 30.0, 2000, 3)
    assert np.all(tau >= 30.0)


@pytest.mark.parametrize("w,t", [(0.2, 0.0), (0.45, 25.0)])
def test_full_pathwise_predicate(w, t):
    tau = death_times(GAMMA, t, 1000, 5)
    ok = path_outcomes(GAMMA, wealth_path(GAMMA, FullUntilRuin(), w, t), tau)
    np.testing.assert_array_equal(ok, tau < solve_tf(GAMMA, w, t))


@pytest.mark.parametrize("w,t", [(0.2, 0.0), (0.45, 25.0)])
def test_wait_pathwise_predicate(w, t):
    tau = death_times(GAMMA, t, 1000, 6)
    ok = path_outcomes(GAMMA, wealth_path(GAMMA, WaitUntilSafe(), w, t), tau)
    np.testing.assert_array_equal(ok, tau > solve_t0(GAMMA, w, t))


def test_wait_fails_when_safe_level_unreachable():
    spec = ProblemSpec(DeMoivre(60.0), 0.02)
    assert solve_t0(spec, 0.25, 0.0) is None
    res = simulate(spec, WaitUntilSafe(), 0.25, 0.0, 2000, 1)
    assert res.estimate == 0.0


def test_reproducible():
    a = simulate(GAMMA, Deferred(10.0), 0.3, 0.0, 5000, 42)
    b = simulate(GAMMA, Deferred(10.0), 0.3, 0.0, 5000, 42)
    assert a == b
    assert a.to_json() == b.to_json()


def test_safe_level_is_absorbing():
    w = safe_level(GAMMA, 10.0)
    for policy in (FullUntilRuin(), WaitUntilSafe()):
        assert simulate(GAMMA, policy, w, 10.0, 1000, 2).estimate == 1.0


def test_zero_interest_full():
    spec = ProblemSpec(ConstantForce(0.05), 0.0)
    res = simulate(spec, FullUntilRuin(), 0.4, 0.0, 100_000, 9)
    assert within(res, 0.4)
    assert res.std_error == pytest.approx(math.sqrt(res.estimate * (1 - res.estimate) / 1e5))


def test_gamma_full_matches_analytic():
    res = simulate(GAMMA, FullUntilRuin(), 0.5, 0.0, 100_000, 4)
    assert within(res, eval_full(GAMMA, 0.5, 0.0).phi)


def test_deferred_now_is_full():
    a = simulate(GAMMA, Deferred(0.0), 0.3, 0.0, 20_000, 8)
    b = simulate(GAMMA, FullUntilRuin(), 0.3, 0.0, 20_000, 8)
    assert a.estimate == b.estimate


def test_deferred_validation():
    with pytest.raises(DomainError):
        wealth_path(GAMMA, Deferred(5.0), 0.3, 10.0)
    with pytest.raises(DomainError):
        wealth_path(GAMMA, Deferred(60.0), 0.5, 20.0)
    with pytest.raises(DomainError):
        simulate(GAMMA, FullUntilRuin(), 0.3, 0.0, 0, 1)


def test_threshold_policy():
    curve = threshold_curve(GAMMA, np.arange(15.0, 301.0, 15.0))
    above = wealth_path(GAMMA, Threshold(curve), 0.5, 20.0)
    assert [s.mode for s in above.segments] == ["wait", "safe"]
    below = wealth_path(GAMMA, Threshold(curve), 0.3, 20.0)
    assert [s.mode for s in below.segments] == ["full"]
    res = simulate(GAMMA, Threshold(curve), 0.3, 20.0, 50_000, 3)
    assert within(res, eval_full(GAMMA, 0.3, 20.0).phi)


def test_threshold_switches_to_full():
    # a steep artificial threshold overtakes uninsured wealth
    curve = ThresholdCurve((0.0, 10.0, 400.0), (0.1, 0.5, 0.52), (True, True, True))
    path = wealth_path(GAMMA, Threshold(curve), 0.2, 0.0)
    assert [s.mode for s in path.segments][:2] == ["wait", "full"]
    switch = path.segments[0].end
    assert 0.2 * math.exp(0.02 * switch) == pytest.approx(curve(switch), abs=1e-9)


def test_threshold_domain():
    curve = ThresholdCurve((15.0, 20.0), (0.38, 0.42), (True, True))
    with pytest.raises(DomainError):
        wealth_path(GAMMA, Threshold(curve), 0.3, 5.0)


def test_batch_csv():
    res = [simulate(GAMMA, FullUntilRuin(), 0.3, 0.0, 100, 1)]
    buf = io.StringIO()
    write_batch(buf, res)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "policy,w,t,n,seed,estimate,stderr"
    assert lines[1].startswith("full,0.3,0,100,1,")
    assert json.loads(res[0].to_json())["n_paths"] == 100
