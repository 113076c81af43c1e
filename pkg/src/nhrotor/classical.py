"""Classical coupled kicked-rotor map and Monte Carlo ensembles (Hermitian case only).

One period is a kick by ``-dV/dtheta_j`` with
``V = K1 cos(theta1) + K2 cos(theta2) + eps*hbar cos(theta1) cos(theta2)``
followed by free rotation ``theta_j += p_j``, matching the quantum
ordering ``U = U_f U_K``.

Ensembles are generated in fixed-size chunks, each drawn from its own child
of ``SeedSequence(seed)``; chunk results are reduced in chunk order, so the
output does not depend on how chunks are scheduled.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .evolution import SystemParams

TWO_PI = 2.0 * np.pi
CHUNK = 1 << 14


@dataclass(frozen=True)
class ClassicalPoint:
    theta1: float
    p1: float
    theta2: float
    p2: float


@dataclass
class ClassicalEnsemble:
    theta1: np.ndarray = field(repr=False)
    p1: np.ndarray = field(repr=False)
    theta2: np.ndarray = field(repr=False)
    p2: np.ndarray = field(repr=False)
    seed: int
    params: SystemParams

    def __post_init__(self):
        _require_hermitian(self.params)

    def __len__(self):
        return self.theta1.size


def _require_hermitian(params):
    if not params.hermitian:
        raise ValueError("the classical map is defined only for lambda1 = lambda2 = 0")


def kick_drift(theta1, p1, theta2, p2, params: SystemParams, wrap=True):
    """Vectorised map on arrays (or scalars); returns new ``(theta1, p1, theta2, p2)``."""
    s1, c1 = np.sin(theta1), np.cos(theta1)
    s2, c2 = np.sin(theta2), np.cos(theta2)
    g = params.eps * params.hbar
    p1 = p1 + params.K1 * s1 + g * s1 * c2
    p2 = p2 + params.K2 * s2 + g * c1 * s2
    theta1 = theta1 + p1
    theta2 = theta2 + p2
    if wrap:
        theta1 = np.mod(theta1, TWO_PI)
        theta2 = np.mod(theta2, TWO_PI)
    return theta1, p1, theta2, p2


def classical_step(point: ClassicalPoint, params: SystemParams) -> ClassicalPoint:
    _require_hermitian(params)
    out = kick_drift(point.theta1, point.p1, point.theta2, point.p2, params)
    return ClassicalPoint(*(float(x) for x in out))


def sample_ensemble(n: int, seed: int, params: SystemParams) -> ClassicalEnsemble:
    """Zero momenta and independent uniform angles, mirroring ``|0,0>``."""
    if n < 1:
        raise ValueError("ensemble needs at least one trajectory")
    n_chunks = -(-n // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    angles = []
    for i, child in enumerate(children):
        m = min(CHUNK, n - i * CHUNK)
        angles.append(np.random.default_rng(child).uniform(0.0, TWO_PI, size=(2, m)))
    th = np.concatenate(angles, axis=1)
    return ClassicalEnsemble(th[0].copy(), np.zeros(n), th[1].copy(), np.zeros(n), seed, params)


def _chunk_moments(args):
    th1, p1, th2, p2, params, n_steps = args
    sums = np.empty(n_steps + 1)
    sq = np.empty(n_steps + 1)
    sums[0], sq[0] = np.sum(p1**2), np.sum(p1**4)
    for t in range(1, n_steps + 1):
        th1, p1, th2, p2 = kick_drift(th1, p1, th2, p2, params)
        e = p1 * p1
        sums[t], sq[t] = e.sum(), np.dot(e, e)
    return sums, sq


def ensemble_p1_squared(ensemble: ClassicalEnsemble, n_steps: int, threads: int = 1,
                        return_stderr: bool = False):
    """Ensemble mean of ``p1^2`` at steps ``0..n_steps``.

    With ``return_stderr`` also returns the standard error of each mean.
    """
    n = len(ensemble)
    jobs = [
        (ensemble.theta1[i:i + CHUNK], ensemble.p1[i:i + CHUNK],
         ensemble.theta2[i:i + CHUNK], ensemble.p2[i:i + CHUNK], ensemble.params, n_steps)
        for i in range(0, n, CHUNK)
    ]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(_chunk_moments, jobs))
    else:
        parts = [_chunk_moments(j) for j in jobs]
    total = np.zeros(n_steps + 1)
    total_sq = np.zeros(n_steps + 1)
    for s, q in parts:
        total += s
        total_sq += q
    mean = total / n
    if not return_stderr:
        return mean
    var = np.maximum(total_sq / n - mean**2, 0.0)
    return mean, np.sqrt(var / max(n - 1, 1))
