"""Norm-corrected observables of particle 1: <p1^2>, reduced density matrix, linear entropy."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .hilbert import MOMENTUM, RepresentationError, TwoRotorState

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NEGATIVE_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def _momentum_amps(state):
    if state.representation != MOMENTUM:
        raise RepresentationError("observables need the momentum representation")
    return state.amps


@dataclass(frozen=True)
class ReducedDensity:
    """Particle-1 density matrix over the momentum indices in ``basis``.

    ``basis`` lists the momenta ``n1`` the rows refer to.  It is the full
    ladder unless low-probability rows were cropped when the matrix was built.
    """

    rho: np.ndarray = field(repr=False)
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def check(self, hermitian_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL):
        """Raise ValueError if Hermiticity or unit trace fail."""
        herm = np.max(np.abs(self.rho - self.rho.conj().T)) if self.dim else 0.0
        if herm > hermitian_tol:
            raise ValueError(f"rho is not Hermitian (max deviation {herm:.2e})")
        tr = np.trace(self.rho).real
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace(rho) = {tr!r}")


def reduced_density(state: TwoRotorState, support_tol: float = 0.0) -> ReducedDensity:
    """``rho1[a, b] = sum_n2 psi[a, n2] conj(psi[b, n2]) / ||psi||^2``.

    With ``support_tol > 0``, momenta of either particle whose marginal
    probability is below it are dropped before the contraction; the
    entries lost are bounded by that probability.
    """
    psi = _momentum_amps(state)
    total = np.vdot(psi.ravel(), psi.ravel()).real
    n = state.grid.n
    if support_tol > 0:
        prob = np.abs(psi) ** 2
        rows = np.nonzero(prob.sum(axis=1) > support_tol * total)[0]
        cols = np.nonzero(prob.sum(axis=0) > support_tol * total)[0]
        del prob
        psi = psi[np.ix_(rows, cols)]
        n = n[rows]
    rho = psi @ psi.conj().T
    # normalize by the trace of the product itself; `total` summed in another
    # order differs at the 1e-12 level on 4096^2 grids
    rho /= np.trace(rho).real
    # exact Hermitian symmetry; BLAS may leave rounding-level asymmetry
    rho = 0.5 * (rho + rho.conj().T)
    return ReducedDensity(rho, n)


def momentum_marginal(state: TwoRotorState, particle: int = 1) -> np.ndarray:
    """Probability of each momentum index of one particle, ordered as ``grid.n``."""
    psi = _momentum_amps(state)
    if particle not in (1, 2):
        raise ValueError("particle must be 1 or 2")
    prob = (psi.real**2 + psi.imag**2).sum(axis=2 - particle)
    return prob / prob.sum()


def mean_p1_squared(state: TwoRotorState) -> float:
    """``Tr(rho1 p1^2)`` from the particle-1 marginal (``p1^2`` is diagonal)."""
    P = momentum_marginal(state, 1)
    p = state.grid.p
    return float(np.dot(P, p * p))


def linear_entropy(rho: ReducedDensity) -> float:
    """``1 - Tr(rho^2)``."""
    a = rho.rho.ravel()
    return float(1.0 - np.vdot(a, a).real)


def state_linear_entropy(state: TwoRotorState, support_tol: float = 0.0) -> float:
    return linear_entropy(reduced_density(state, support_tol))


@dataclass(frozen=True)
class RhoSpectrum:
    """Eigenvalues of rho1 sorted descending.

    ``eig_index`` is each value's position in the solver's (ascending) output,
    kept so unordered scatter plots can be redrawn.
    """

    xi: np.ndarray
    eig_index: np.ndarray
    vectors: np.ndarray = field(repr=False)
    residual: np.ndarray = field(repr=False)


def rho_spectrum(rho: ReducedDensity, residual_tol: float = RESIDUAL_TOL) -> RhoSpectrum:
    try:
        w, v = scipy.linalg.eigh(rho.rho)
    except np.linalg.LinAlgError as err:
        herm = np.max(np.abs(rho.rho - rho.rho.conj().T))
        raise np.linalg.LinAlgError(
            f"eigh failed on {rho.dim}x{rho.dim} rho (trace {np.trace(rho.rho).real:.6g}, "
            f"Hermiticity defect {herm:.2e}): {err}"
        ) from err
    if w.size and w.min() < -NEGATIVE_TOL:
        raise ValueError(f"rho has a negative eigenvalue {w.min():.3e}")
    residual = np.linalg.norm(rho.rho @ v - v * w, axis=0)
    if residual.size and residual.max() > residual_tol:
        raise np.linalg.LinAlgError(f"eigenpair residual {residual.max():.2e} above {residual_tol:.0e}")
    w = np.clip(w, 0.0, 1.0)
    idx = np.arange(w.size)
    order = np.lexsort((idx, -w))
    return RhoSpectrum(w[order], idx[order], v[:, order], residual[order])
