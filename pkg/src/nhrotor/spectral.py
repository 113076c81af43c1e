"""Floquet matrix, complex quasienergies and the dominant quasieigenstate.

The matrix is stored scaled by ``exp(-log_scale)`` with
``log_scale = (lambda1 + lambda2) / hbar`` so that its entries stay of
order one; eigenvalues and residuals are reported in raw units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .evolution import SystemParams, apply_raw, build_propagator
from .hilbert import MomentumGrid, NumericalError, TwoRotorState

DEFAULT_CAP = 4096
MAX_LOG = math.log(np.finfo(float).max)


class SpectralError(RuntimeError):
    pass


class NoConvergence(SpectralError):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class FloquetMatrix:
    """One raw period ``U`` on the flattened ``(n1, n2)`` basis (C order)."""

    scaled: np.ndarray = field(repr=False)
    log_scale: float
    params: SystemParams
    grid: MomentumGrid

    @property
    def dim(self) -> int:
        return self.scaled.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Raw matrix; fails when ``exp(log_scale)`` is not representable."""
        if self.log_scale > MAX_LOG:
            raise NumericalError(f"raw Floquet entries overflow: max exponent {self.log_scale:.4g}")
        return self.scaled * math.exp(self.log_scale)

    def apply_scaled(self, v: np.ndarray) -> np.ndarray:
        return self.scaled @ v


@dataclass(frozen=True)
class EigenPair:
    mu: complex
    eps_r: float
    eps_i: float
    vector: np.ndarray = field(repr=False)
    residual: float

    @property
    def residual_bound(self) -> float:
        """Contract ``1e-8 * max(1, |mu|)``."""
        return 1e-8 * max(1.0, math.exp(self.eps_i))

    @property
    def residual_ok(self) -> bool:
        return self.residual <= self.residual_bound


def quasienergy(mu: complex) -> tuple[float, float]:
    """``(eps_r, eps_i)`` with ``mu = exp(-i*(eps_r + i*eps_i))``; ``eps_r`` in [-pi, pi)."""
    mu = complex(mu)
    if mu == 0:
        raise ValueError("quasienergy undefined for mu = 0")
    return -math.atan2(mu.imag, mu.real), math.log(abs(mu))


def _pair(mu_scaled, log_scale, vector, residual_scaled):
    eps_r, eps_i_scaled = quasienergy(mu_scaled)
    eps_i = eps_i_scaled + log_scale
    mu = complex(mu_scaled) * math.exp(log_scale) if eps_i < MAX_LOG else complex(math.inf, 0)
    return EigenPair(mu, eps_r, eps_i, vector, float(residual_scaled) * math.exp(log_scale))


def build_floquet_matrix(params: SystemParams, grid: MomentumGrid, cap: int = DEFAULT_CAP) -> FloquetMatrix:
    """Column ``j`` is one unnormalized split-operator period applied to basis vector ``j``."""
    N = grid.size
    D = N * N
    if D > cap:
        raise ValueError(f"Floquet dimension {D} exceeds cap {cap}")
    prop = build_propagator(params, grid)
    log_scale = params.log_gain_max
    basis = np.eye(D, dtype=complex).reshape(D, N, N)
    cols = apply_raw(basis, prop, kick_scale=math.exp(-log_scale))
    scaled = np.ascontiguousarray(cols.reshape(D, D).T)
    if not np.all(np.isfinite(scaled)):
        raise NumericalError(f"non-finite Floquet entries (max exponent {log_scale:.4g})")
    return FloquetMatrix(scaled, log_scale, params, grid)


def eig_full(fm: FloquetMatrix) -> list[EigenPair]:
    """All eigenpairs, sorted by ``eps_i`` descending (ties keep solver order)."""
    try:
        w, v = scipy.linalg.eig(fm.scaled)
    except np.linalg.LinAlgError as err:
        raise SpectralError(f"dense eigensolver failed on D={fm.dim}: {err}") from err
    v = v / np.linalg.norm(v, axis=0)
    res = np.linalg.norm(fm.scaled @ v - v * w, axis=0)
    pairs = [_pair(w[j], fm.log_scale, v[:, j], res[j]) for j in range(w.size)]
    order = sorted(range(len(pairs)), key=lambda j: -pairs[j].eps_i)
    return [pairs[j] for j in order]


def dominant_eigenpair(apply: Callable[[np.ndarray], np.ndarray], dim: int, tol: float = 1e-12,
                       max_iters: int = 20000, log_scale: float = 0.0, v0=None, seed: int = 0) -> EigenPair:
    """Power iteration for the eigenvalue of largest modulus (largest ``eps_i``).

    ``apply`` acts with ``U * exp(-log_scale)``.  Converged when
    ``||A v - mu v|| <= tol * |mu|``; otherwise `NoConvergence` carries the
    Rayleigh-quotient history, which is the symptom of a (near-)degenerate
    dominant modulus such as a unitary spectrum.
    """
    if v0 is None:
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    else:
        v = np.array(v0, dtype=complex).ravel()
    v /= np.linalg.norm(v)
    history = []
    for _ in range(max_iters):
        w = apply(v)
        mu = np.vdot(v, w)
        res = np.linalg.norm(w - mu * v)
        history.append(mu)
        if abs(mu) > 0 and res <= tol * abs(mu):
            return _pair(mu, log_scale, v, res)
        nw = np.linalg.norm(w)
        if not (np.isfinite(nw) and nw > 0):
            raise NumericalError(f"power iteration produced norm {nw}")
        v = w / nw
    raise NoConvergence(
        f"power iteration did not converge in {max_iters} iterations "
        f"(last residual {res:.2e}); dominant modulus may be degenerate",
        np.array(history),
    )


def dominant_from_params(params: SystemParams, grid: MomentumGrid, **kwargs) -> EigenPair:
    """Dominant pair via the split-operator action, without forming the matrix."""
    if params.hermitian:
        raise ValueError("unitary Floquet operator: every |mu| = 1, no dominant quasieigenstate")
    prop = build_propagator(params, grid)
    N = grid.size
    scale = math.exp(-params.log_gain_max)

    def apply(v):
        return apply_raw(v.reshape(N, N), prop, kick_scale=scale).ravel()

    return dominant_eigenpair(apply, N * N, log_scale=params.log_gain_max, **kwargs)


def eigenvector_state(pair: EigenPair, grid: MomentumGrid) -> TwoRotorState:
    return TwoRotorState(grid, pair.vector.reshape(grid.size, grid.size) / np.linalg.norm(pair.vector))


def fidelity(phi, psi) -> float:
    """``|<phi|psi>|^2`` after normalizing both; accepts arrays or states."""
    a = np.asarray(getattr(phi, "amps", phi)).ravel()
    b = np.asarray(getattr(psi, "amps", psi)).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("fidelity of a zero vector")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2 / (na * na * nb * nb)))


def fidelity_panel(pairs, state) -> np.ndarray:
    """Fidelity of ``state`` with every quasieigenstate, in the order of ``pairs``."""
    b = np.asarray(state.amps).ravel()
    b = b / np.linalg.norm(b)
    V = np.stack([p.vector for p in pairs], axis=1)
    return np.clip(np.abs(V.conj().T @ b) ** 2, 0.0, 1.0)


def max_eps_i_scan(base: SystemParams, grid: MomentumGrid, lambdas, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Largest ``eps_i`` of the full spectrum for each symmetric lambda."""
    out = []
    for lam in lambdas:
        p = SystemParams(base.K1, base.K2, lam, lam, base.eps, base.hbar)
        pairs = eig_full(build_floquet_matrix(p, grid, cap))
        out.append(pairs[0].eps_i)
    return np.array(out)
