import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gradvar.advisor import (
    FitResult,
    Recommendation,
    WkbParams,
    classify,
    critical_sigma,
    fit_wkb,
    recommend,
    render,
    thermal_probability,
    tunneling_probability,
)
from gradvar.errors import InsufficientData, InvalidArgument
from gradvar.generators import gen_synthetic
from gradvar.landscape import gradient_variance

pos = st.floats(1e-3, 1e3, allow_nan=False)


def test_tunneling_values():
    assert tunneling_probability(0.3, 2.1) == pytest.approx(math.exp(-7.0), rel=1e-15)
    assert tunneling_probability(0.3, 2.1) == pytest.approx(9.1e-4, rel=0.01)
    assert tunneling_probability(1e12, WkbParams(alpha=2.1)) == pytest.approx(1.0)
    with pytest.raises(InvalidArgument):
        tunneling_probability(0.0, 2.1)
    with pytest.raises(InvalidArgument):
        tunneling_probability(-1.0, 2.1)


@given(pos, pos)
def test_tunneling_strictly_increasing(sigma, alpha):
    a = tunneling_probability(sigma, alpha)
    b = tunneling_probability(2 * sigma, alpha)
    assert 0 <= a <= b <= 1
    if 0 < a < 1 and b < 1:
        assert a < b


def test_thermal_values():
    assert thermal_probability(0.0, 1.0) == 1.0
    assert thermal_probability(1.0, 1.0) == pytest.approx(math.exp(-1))
    assert thermal_probability(2.0, 0.5) == pytest.approx(math.exp(-4))
    with pytest.raises(InvalidArgument):
        thermal_probability(1.0, 0.0)
    with pytest.raises(InvalidArgument):
        thermal_probability(-1.0, 1.0)


@given(st.floats(0.01, 50), st.floats(0.1, 10), st.floats(1.01, 3))
def test_thermal_monotone(delta_e, kT, f):
    p = thermal_probability(delta_e, kT)
    assert thermal_probability(delta_e * f, kT) < p
    assert thermal_probability(delta_e, kT * f) > p


def test_critical_sigma():
    assert critical_sigma(WkbParams(2.1, 1.0, 7.0)) == pytest.approx(0.3)
    base = critical_sigma(WkbParams(2.1, 0.5, 3.0))
    assert critical_sigma(WkbParams(2.1, 0.5, 6.0)) == pytest.approx(base / 2)
    assert critical_sigma(WkbParams(1e-12, 1.0, 1.0)) == pytest.approx(0.0, abs=1e-11)
    with pytest.raises(InvalidArgument):
        WkbParams(alpha=0.0)


def test_fit_exact_law():
    sigmas = np.linspace(0.1, 2.0, 9)
    pts = [(s, math.exp(-2.1 / s + 0.3)) for s in sigmas]
    fit = fit_wkb(pts)
    assert abs(fit.slope + 2.1) <= 1e-9
    assert abs(fit.intercept - 0.3) <= 1e-9
    assert fit.r_squared >= 1 - 1e-12
    assert fit.alpha == pytest.approx(2.1)
    assert fit.predict(0.5) == pytest.approx(math.exp(-4.2 + 0.3))


def test_fit_constant_response():
    fit = fit_wkb([(0.2, 0.5), (0.4, 0.5), (0.8, 0.5)])
    assert fit.slope == 0.0
    assert fit.r_squared == 0.0


def test_fit_excludes_zero_success():
    pts = [(0.1, 0.0), (0.5, math.exp(-4)), (1.0, math.exp(-2)), (2.0, math.exp(-1))]
    fit = fit_wkb(pts)
    assert fit.excluded == [(0.1, 0.0)]
    assert len(fit.points) == 3
    assert fit.slope == pytest.approx(-2.0)


def test_fit_needs_three_points():
    with pytest.raises(InsufficientData):
        fit_wkb([(0.5, 0.1), (1.0, 0.0), (2.0, 0.2)])
    with pytest.raises(InsufficientData):
        fit_wkb([(1.0, 0.1), (1.0, 0.2), (1.0, 0.3)])
    with pytest.raises(InvalidArgument):
        fit_wkb([(0.0, 0.1), (1.0, 0.2), (2.0, 0.3)])
    with pytest.raises(InvalidArgument):
        fit_wkb([(0.5, 1.5), (1.0, 0.2), (2.0, 0.3)])


@given(st.lists(st.tuples(st.floats(0.05, 5), st.floats(1e-6, 1)), min_size=3, max_size=12))
def test_fit_r_squared_in_unit_interval(pts):
    try:
        fit = fit_wkb(pts)
    except InsufficientData:
        return
    assert 0.0 <= fit.r_squared <= 1.0


def test_fit_serializes():
    d = fit_wkb([(0.5, 0.1), (1.0, 0.2), (2.0, 0.3), (3.0, 0.0)]).to_dict()
    assert set(d) >= {"slope", "intercept", "r_squared", "points", "excluded"}
    assert d["excluded"] == [[3.0, 0.0]]


def test_regime_labels():
    assert recommend(0.42).verdict == "quantum_recommended"
    assert recommend(0.10).verdict == "classical_recommended"
    assert recommend(0.25).verdict == "marginal"


def test_boundaries_are_closed():
    assert classify(0.3) == "quantum_recommended"
    assert classify(0.2) == "classical_recommended"
    assert classify(np.nextafter(0.3, 0)) == "marginal"
    assert classify(np.nextafter(0.2, 1)) == "marginal"


@given(st.floats(0, 10), st.integers(1, 10_000))
def test_recommend_is_pure_and_consistent(sigma, n):
    a, b = recommend(sigma, n), recommend(sigma, n)
    assert a == b
    if sigma >= 0.3:
        assert a.verdict == "quantum_recommended"
    elif sigma <= 0.2:
        assert a.verdict == "classical_recommended"
    else:
        assert a.verdict == "marginal"
    assert bool(a.caveats) == (n > 5000)


def test_recommend_from_report_and_growth():
    rep = gradient_variance(gen_synthetic(6, seed=0), 200, seed=0)
    rec = recommend(rep, 6, size_growth=2)
    assert rec.sigma_measured == rep.sigma_grad
    assert any("added 2" in c for c in rec.caveats)
    d = rec.to_dict()
    assert d["verdict"] == rec.verdict and d["threshold_used"] == [0.2, 0.3]
    with pytest.raises(InvalidArgument):
        recommend(-1.0)


def test_render_summary():
    text = render(Recommendation("marginal", 0.25, (0.2, 0.3), "x", 10), WkbParams())
    assert "verdict" in text and "sigma_critical" in text and "P_thermal" in text
    assert isinstance(FitResult(0.0, 0.0, 0.0, []).to_dict(), dict)
