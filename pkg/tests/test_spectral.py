import cmath
import math

import numpy as np
import pytest

from nhrotor.evolution import SystemParams, build_propagator, evolve, step
from nhrotor.hilbert import basis_state, ground_product_state, make_grid
from nhrotor.observables import momentum_marginal
from nhrotor.spectral import (
    FloquetMatrix,
    NoConvergence,
    build_floquet_matrix,
    dominant_eigenpair,
    dominant_from_params,
    eig_full,
    eigenvector_state,
    fidelity,
    fidelity_panel,
    quasienergy,
)
from nhrotor.analysis import fit_exponential_localization

from conftest import dense_floquet


def test_hermitian_matrix_unitary(ref_params):
    fm = build_floquet_matrix(ref_params(0.0), make_grid(4, 0.06))
    assert fm.log_scale == 0
    U = fm.matrix
    np.testing.assert_allclose(U.conj().T @ U, np.eye(64), atol=1e-12)


def test_free_evolution_is_diagonal():
    g = make_grid(4, 0.06)
    U = build_floquet_matrix(SystemParams(0, 0, 0, 0, 0, 0.06), g).matrix
    n1, n2 = np.meshgrid(g.n, g.n, indexing="ij")
    expected = np.exp(-0.03j * (n1**2 + n2**2)).ravel()
    np.testing.assert_allclose(U, np.diag(expected), atol=1e-14)


@pytest.mark.parametrize("lam", [0.0, 0.1, 2.0])
def test_matrix_matches_dense_oracle(ref_params, lam):
    p = ref_params(lam)
    g = make_grid(4, 0.06)
    fm = build_floquet_matrix(p, g)
    ref = dense_floquet(p, g) * math.exp(-fm.log_scale)
    assert np.max(np.abs(fm.scaled - ref)) <= 1e-10


def test_matrix_columns_match_step(ref_params):
    p = ref_params(0.1)
    g = make_grid(4, 0.06)
    fm = build_floquet_matrix(p, g)
    prop = build_propagator(p, g)
    for j in (0, 17, 45):
        col = fm.scaled[:, j]
        s = step(_basis_flat(g, j), prop, alias_tol=None)
        np.testing.assert_allclose(col / np.linalg.norm(col), s.amps.ravel(), atol=1e-12)


def _basis_flat(g, j):
    i1, i2 = divmod(j, g.size)
    return basis_state(g, int(g.n[i1]), int(g.n[i2]))


def test_dimension_cap(ref_params):
    with pytest.raises(ValueError):
        build_floquet_matrix(ref_params(0.1), make_grid(64, 0.06), cap=4096)


def test_quasienergy_examples():
    assert quasienergy(1) == (0.0, 0.0)
    eps_r, eps_i = quasienergy(cmath.exp(64.62))
    assert eps_r == 0 and eps_i == pytest.approx(64.62, rel=1e-14)
    eps_r, eps_i = quasienergy(-1j)
    assert eps_r == pytest.approx(math.pi / 2) and eps_i == 0
    assert quasienergy(-1)[0] == pytest.approx(-math.pi)
    with pytest.raises(ValueError):
        quasienergy(0)


def test_fidelity_examples():
    g = make_grid(4, 0.06)
    a, b = basis_state(g, 0, 0), basis_state(g, 1, 0)
    assert fidelity(a, a) == 1 and fidelity(a, b) == 0
    v = (a.amps + b.amps) * 3j
    assert fidelity(a, v) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        fidelity(a, np.zeros(64))


def test_power_iteration_diagonal():
    d = np.array([2.0, 1.0, 0.5, 0.25])
    pair = dominant_eigenpair(lambda v: d * v, 4)
    assert pair.mu == pytest.approx(2.0, rel=1e-12)
    assert abs(pair.vector[0]) == pytest.approx(1.0, abs=1e-10)


def test_power_iteration_unitary_fails(ref_params):
    with pytest.raises(ValueError):
        dominant_from_params(ref_params(0.0), make_grid(4, 0.06))
    rot = np.exp(1j * np.array([0.1, 0.7, 1.3]))
    with pytest.raises(NoConvergence) as info:
        dominant_eigenpair(lambda v: rot * v, 3, max_iters=200)
    assert len(info.value.history) == 200


def test_dominant_matches_full_spectrum(ref_params):
    p = ref_params(2.0)
    g = make_grid(4, 0.06)
    pairs = eig_full(build_floquet_matrix(p, g))
    top = dominant_from_params(p, g)
    assert top.eps_i == pytest.approx(pairs[0].eps_i, rel=1e-10)
    assert abs(top.mu - pairs[0].mu) <= 1e-8 * abs(pairs[0].mu)
    assert fidelity(top.vector, pairs[0].vector) == pytest.approx(1, abs=1e-10)
    assert all(a.eps_i >= b.eps_i for a, b in zip(pairs, pairs[1:]))


def test_eps_i_bound_and_panel(ref_params):
    p = ref_params(0.1)
    g = make_grid(4, 0.06)
    pairs = eig_full(build_floquet_matrix(p, g))
    assert max(q.eps_i for q in pairs) <= (p.lambda1 + p.lambda2) / p.hbar + 1e-9
    assert all(q.residual_ok for q in pairs)
    panel = fidelity_panel(pairs, ground_product_state(g))
    assert panel.shape == (64,) and np.all((panel >= 0) & (panel <= 1))


def test_evolved_state_approaches_dominant(ref_params):
    p = ref_params(2.0)
    g = make_grid(4, 0.06)
    top = dominant_from_params(p, g)
    traj = evolve(ground_product_state(g), 40, build_propagator(p, g), alias_tol=None,
                  observers=[_fid_observer(top)])
    _, f = traj.series("F")
    assert f[-1] > 0.99
    # converges monotonically once the dominant component takes over
    assert np.all(np.diff(f[5:]) >= -1e-12)


def _fid_observer(top):
    from nhrotor.evolution import Observer
    return Observer("F", lambda s: fidelity(top.vector, s))


def test_qes_is_localized(ref_params):
    p = ref_params(2.0)
    g = make_grid(64, 0.06)
    qes = eigenvector_state(dominant_from_params(p, g), g)
    P = momentum_marginal(qes, 1)
    assert np.argmax(P) == g.index(0)
    fit = fit_exponential_localization(P, g.hbar)
    assert 0 < fit.value < 1.0
