import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhrotor.analysis import (
    fit_exponential_localization,
    fit_gaussian,
    fit_linear_diffusion,
    saturation_value,
)

HBAR = 0.06


def profile(M, shape):
    p = (np.arange(2 * M) - M) * HBAR
    P = shape(p)
    return P / P.sum()


def test_diffusion_recovers_slope():
    t = np.arange(31)
    fit = fit_linear_diffusion(t, 12.5 * t + 3.0, fit_intercept=True)
    assert fit.value == pytest.approx(12.5, rel=1e-12)
    assert fit.intercept == pytest.approx(3.0, abs=1e-10)
    assert fit.window == (5.0, 30.0) and fit.n_points == 26 and fit.r2 == pytest.approx(1)


def test_diffusion_noisy_within_two_percent():
    rng = np.random.default_rng(5)
    t = np.arange(31)
    y = 12.5 * t * (1 + 0.02 * rng.standard_normal(t.size))
    assert fit_linear_diffusion(t, y).value == pytest.approx(12.5, rel=0.02)


def test_diffusion_constant_series():
    fit = fit_linear_diffusion(np.arange(31), np.full(31, 4.0), fit_intercept=True)
    assert fit.value == pytest.approx(0, abs=1e-12) and fit.r2 == 1.0


def test_diffusion_through_origin_by_default():
    t = np.arange(31)
    fit = fit_linear_diffusion(t, 2.0 * t)
    assert fit.value == pytest.approx(2.0) and fit.intercept == 0


def test_diffusion_window_too_small():
    with pytest.raises(ValueError):
        fit_linear_diffusion(np.arange(6), np.arange(6), window=(5, 30))


@pytest.mark.parametrize("zeta", [2.5, 7.7])
def test_exponential_recovery(zeta):
    P = profile(2048, lambda p: np.exp(-np.abs(p) / zeta))
    fit = fit_exponential_localization(P, HBAR)
    assert fit.value == pytest.approx(zeta, rel=0.02)
    assert "model_mismatch" not in fit.flags and "insufficient_dynamic_range" not in fit.flags


def test_gaussian_recovery_and_mismatch():
    P = profile(1024, lambda p: np.exp(-p**2 / 20.0))
    g = fit_gaussian(P, HBAR)
    assert g.value == pytest.approx(20.0, rel=0.02) and not g.flags
    e = fit_exponential_localization(P, HBAR)
    assert "model_mismatch" in e.flags


def test_exponential_data_flags_gaussian_model():
    P = profile(1024, lambda p: np.exp(-np.abs(p) / 2.5))
    assert "model_mismatch" in fit_gaussian(P, HBAR).flags


def test_narrow_dynamic_range_flagged():
    P = profile(64, lambda p: np.exp(-np.abs(p) / 50.0))
    assert "insufficient_dynamic_range" in fit_exponential_localization(P, HBAR).flags


def test_too_few_sites():
    P = np.zeros(64)
    P[30:35] = 0.2
    with pytest.raises(ValueError):
        fit_exponential_localization(P, HBAR)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-3, 1e3))
def test_zeta_invariant_under_rescaling(c):
    P = profile(512, lambda p: np.exp(-np.abs(p) / 3.0))
    a = fit_exponential_localization(P, HBAR)
    b = fit_exponential_localization(P * c, HBAR, floor=1e-12 * c)
    assert b.value == pytest.approx(a.value, rel=1e-9)


def test_saturation_verdicts():
    t = np.arange(101)
    flat = 50 * (1 - np.exp(-t / 10))
    s = saturation_value(flat)
    assert s.saturated and s.mean == pytest.approx(50, rel=1e-3)
    assert s.tail == (81.0, 100.0)
    growing = saturation_value(12.5 * t)
    assert not growing.saturated and growing.drift > 0.05


def test_saturation_needs_points():
    with pytest.raises(ValueError):
        saturation_value(np.ones(5))


def test_fit_result_serializable():
    import json
    d = fit_linear_diffusion(np.arange(31), np.arange(31) * 1.0).as_dict()
    assert json.loads(json.dumps(d))["name"] == "D"
