import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhrotor.hilbert import (
    ANGLE,
    MOMENTUM,
    NumericalError,
    RepresentationError,
    TruncationError,
    TwoRotorState,
    basis_state,
    boundary_mass,
    entangled_gaussian_state,
    from_amplitudes,
    ground_product_state,
    make_grid,
    norm,
    renormalize,
    to_angle,
    to_momentum,
)
from nhrotor.evolution import SystemParams, build_propagator, apply_raw
from nhrotor.observables import linear_entropy, reduced_density

from conftest import random_amps


def test_make_grid_layout():
    g = make_grid(4, 0.06)
    assert list(g.n) == [-4, -3, -2, -1, 0, 1, 2, 3]
    np.testing.assert_allclose(g.theta, np.pi * np.arange(8) / 4)
    np.testing.assert_allclose(g.p, 0.06 * g.n)
    assert make_grid(1024, 0.06).size == 2048


@pytest.mark.parametrize("M, hbar", [(3, 0.06), (6, 0.06), (1, 0.06), (4, 0.0), (4, -1.0)])
def test_make_grid_rejects(M, hbar):
    with pytest.raises(ValueError):
        make_grid(M, hbar)


def test_ground_state_to_angle_is_flat():
    g = make_grid(4, 0.06)
    a = to_angle(ground_product_state(g))
    assert a.representation == ANGLE
    np.testing.assert_allclose(a.amps, np.full((8, 8), 1 / 8), atol=1e-15)


def test_single_mode_to_angle():
    g = make_grid(8, 0.06)
    a = to_angle(basis_state(g, 1, 0)).amps
    expected = np.exp(1j * g.theta)[:, None] * np.ones(g.size)[None, :] / g.size
    np.testing.assert_allclose(a, expected, atol=1e-15)


def test_representation_tags_enforced():
    g = make_grid(4, 0.06)
    s = ground_product_state(g)
    with pytest.raises(RepresentationError):
        to_momentum(s)
    with pytest.raises(RepresentationError):
        to_angle(to_angle(s))


@pytest.mark.parametrize("M", [4, 64])
def test_round_trip_and_norm(M, rng):
    g = make_grid(M, 0.06)
    s = from_amplitudes(g, random_amps(rng, g.size))
    a = to_angle(s)
    assert abs(norm(a) - 1) < 1e-12
    back = to_momentum(a)
    assert back.representation == MOMENTUM
    assert np.max(np.abs(back.amps - s.amps)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([2, 4, 8, 16]), st.integers(0, 2**32 - 1))
def test_round_trip_property(M, seed):
    g = make_grid(M, 1.0)
    s = from_amplitudes(g, random_amps(np.random.default_rng(seed), g.size))
    assert abs(norm(s) - 1) < 1e-12
    assert abs(norm(to_angle(s)) - 1) < 1e-12
    assert np.max(np.abs(to_momentum(to_angle(s)).amps - s.amps)) < 1e-12


def test_ground_product_state():
    g = make_grid(4, 0.06)
    s = ground_product_state(g)
    assert s.amps.shape == (8, 8)
    assert s.amplitude(0, 0) == 1
    assert np.count_nonzero(s.amps) == 1
    assert norm(s) == 1 and s.log_norm == 0
    assert linear_entropy(reduced_density(s)) == 0


def test_entangled_gaussian_narrow_limit():
    g = make_grid(8, 0.06)
    s = entangled_gaussian_state(g, 1e-3)
    assert abs(s.amplitude(0, 1)) == pytest.approx(1.0)
    assert np.count_nonzero(np.abs(s.amps) > 1e-300) == 1
    assert linear_entropy(reduced_density(s)) == pytest.approx(0.0, abs=1e-15)


def test_entangled_gaussian_symmetry_and_rho():
    g = make_grid(32, 0.06)
    sigma = 60.0
    s = entangled_gaussian_state(g, sigma)
    assert s.log_norm == 0 and abs(norm(s) - 1) < 1e-12
    for n in range(0, 30):
        assert abs(s.amplitude(n, n + 1)) == pytest.approx(abs(s.amplitude(-n, -n + 1)), rel=1e-14)
    # partial trace by explicit summation
    N = g.size
    rho = np.zeros((N, N), dtype=complex)
    for a in range(N):
        for b in range(N):
            rho[a, b] = sum(s.amps[a, k] * np.conj(s.amps[b, k]) for k in range(N))
    n = np.arange(-32, 32)
    w = np.where(n <= 30, np.exp(-2.0 * n**2 / sigma), 0.0)
    np.testing.assert_allclose(rho, np.diag(w / w.sum()), atol=1e-14)
    np.testing.assert_allclose(reduced_density(s).rho, rho, atol=1e-14)


def test_entangled_gaussian_tail_violation():
    g = make_grid(16, 0.06)
    with pytest.raises(TruncationError) as info:
        entangled_gaussian_state(g, 12000.0)
    assert info.value.truncated_mass > 0.5


def test_entangled_gaussian_sigma12000_is_maximally_mixed():
    g = make_grid(1024, 0.06)
    s = entangled_gaussian_state(g, 12000.0)
    assert linear_entropy(reduced_density(s, support_tol=1e-30)) >= 0.99


def test_renormalize_increments():
    g = make_grid(4, 0.06)
    s, inc = renormalize(ground_product_state(g))
    assert inc == 0 and norm(s) == 1
    doubled = TwoRotorState(g, 2 * ground_product_state(g).amps)
    s, inc = renormalize(doubled)
    assert inc == pytest.approx(math.log(2), abs=1e-15)
    assert s.log_norm == pytest.approx(math.log(2), abs=1e-15)


@pytest.mark.parametrize("value", [0.0, np.nan, np.inf])
def test_renormalize_fatal(value):
    g = make_grid(4, 0.06)
    amps = np.full((8, 8), value, dtype=complex)
    with pytest.raises(NumericalError):
        renormalize(TwoRotorState(g, amps))


def test_one_kick_gain_on_flat_state():
    # |0,0> is flat in angle; the kicked norm is the rms of the gain field
    g = make_grid(32, 0.06)
    p = SystemParams.symmetric(5.0, 2.0, 0.3, 0.06)
    prop = build_propagator(p, g)
    s = ground_product_state(g)
    _, inc = renormalize(TwoRotorState(g, apply_raw(s.amps, prop)))
    c = np.cos(g.theta)
    per_rotor = np.mean(np.exp(2 * 2.0 * c / 0.06))
    assert inc == pytest.approx(math.log(per_rotor), rel=1e-12)
    assert inc <= (2.0 + 2.0) / 0.06


def test_boundary_mass():
    g = make_grid(16, 0.06)
    assert boundary_mass(ground_product_state(g)) == 0
    assert boundary_mass(basis_state(g, -16, 0)) == 1
    assert boundary_mass(basis_state(g, 0, 15)) == 1
    assert boundary_mass(basis_state(g, 0, 14)) == 0
