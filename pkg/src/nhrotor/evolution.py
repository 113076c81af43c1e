"""One-period Floquet propagation ``U = U_f U_K`` by split-operator stepping."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .hilbert import (
    MOMENTUM,
    MomentumGrid,
    NumericalError,
    RepresentationError,
    TwoRotorState,
    boundary_mass,
    renormalize,
)

# squared norms of a kicked unit state must stay finite
MAX_LOG_GAIN = 0.5 * math.log(np.finfo(float).max)
UNIT_NORM_TOL = 1e-12


class AliasingError(RuntimeError):
    """Probability reached the outer momentum band of the truncated grid."""

    def __init__(self, message, state=None, mass=None):
        super().__init__(message)
        self.state = state
        self.mass = mass


@dataclass(frozen=True)
class SystemParams:
    """Coupled kicked rotors with complex kick strengths ``K_j + i*lambda_j``.

    The kick period is 1; all quantities are dimensionless.
    """

    K1: float
    K2: float
    lambda1: float
    lambda2: float
    eps: float
    hbar: float

    def __post_init__(self):
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("lambda1 and lambda2 must be non-negative")

    @classmethod
    def symmetric(cls, K: float, lam: float, eps: float, hbar: float) -> "SystemParams":
        return cls(K, K, lam, lam, eps, hbar)

    @property
    def log_gain_max(self) -> float:
        """``ln max|kick_field|``, reached at theta1 = theta2 = 0."""
        return (self.lambda1 + self.lambda2) / self.hbar

    @property
    def hermitian(self) -> bool:
        return self.lambda1 == 0 and self.lambda2 == 0


@dataclass(frozen=True)
class PrecomputedPropagator:
    """Kick factor on the angle nodes and free phases per momentum axis."""

    params: SystemParams
    grid: MomentumGrid
    kick_field: np.ndarray = field(repr=False)
    free_phase_1: np.ndarray = field(repr=False)
    free_phase_2: np.ndarray = field(repr=False)

    @property
    def free_phase(self) -> np.ndarray:
        return np.outer(self.free_phase_1, self.free_phase_2)


def kick_exponent(params: SystemParams, grid: MomentumGrid) -> np.ndarray:
    """Exponent of the kick factor; real part is the gain, imaginary part the phase."""
    c = np.cos(grid.theta)
    c1, c2 = c[:, None], c[None, :]
    phase = (params.K1 * c1 + params.K2 * c2 + params.eps * params.hbar * c1 * c2) / params.hbar
    gain = (params.lambda1 * c1 + params.lambda2 * c2) / params.hbar
    return gain - 1j * phase


def build_propagator(params: SystemParams, grid: MomentumGrid) -> PrecomputedPropagator:
    if params.hbar != grid.hbar:
        raise ValueError(f"params.hbar={params.hbar} differs from grid.hbar={grid.hbar}")
    if params.log_gain_max > MAX_LOG_GAIN:
        raise NumericalError(
            f"kick gain exponent (lambda1+lambda2)/hbar = {params.log_gain_max:.4g} "
            f"exceeds the representable limit {MAX_LOG_GAIN:.4g}"
        )
    kick = np.exp(kick_exponent(params, grid))
    n = grid.n.astype(float)
    free = np.exp(-0.5j * grid.hbar * n**2)
    return PrecomputedPropagator(params, grid, kick, free, free.copy())


def apply_raw(amps: np.ndarray, prop: PrecomputedPropagator, kick_scale: float = 1.0, workers=None) -> np.ndarray:
    """Unnormalized one-period action on momentum amplitudes.

    Works on the trailing two axes, so a stack of states is propagated at
    once.  The centering shifts on the way into and out of the angle
    representation are both multiplications by ``(-1)**(k1+k2)`` and cancel,
    so the plain transforms are used here.
    """
    out = sfft.ifft2(amps, norm="ortho", axes=(-2, -1), workers=workers)
    out *= prop.kick_field
    if kick_scale != 1.0:
        out *= kick_scale
    out = sfft.fft2(out, norm="ortho", axes=(-2, -1), overwrite_x=True, workers=workers)
    out *= prop.free_phase_1[:, None]
    out *= prop.free_phase_2[None, :]
    return out


def step(state: TwoRotorState, prop: PrecomputedPropagator, *, alias_tol: float | None = 1e-8,
         band_fraction: float = 0.05, workers=None) -> TwoRotorState:
    """Advance one period: kick, free rotation, renormalize.

    Raises `AliasingError` (carrying the stepped state) when more than
    ``alias_tol`` of the probability sits in the outer momentum band;
    ``alias_tol=None`` disables the check.
    """
    if state.representation != MOMENTUM:
        raise RepresentationError("step needs the momentum representation")
    if state.grid != prop.grid:
        raise ValueError("state and propagator live on different grids")
    amps = apply_raw(state.amps, prop, workers=workers)
    new, _ = renormalize(replace(state, amps=amps))
    if alias_tol is not None:
        mass = boundary_mass(new, band_fraction)
        if mass > alias_tol:
            raise AliasingError(
                f"boundary-band mass {mass:.3e} exceeds {alias_tol:.1e}", state=new, mass=mass
            )
    return new


@dataclass
class Observer:
    """Named observable evaluated every ``every`` steps (step 0 included) and at steps in ``at``."""

    name: str
    fn: Callable[[TwoRotorState], object]
    every: int = 1
    at: frozenset = frozenset()

    def due(self, t: int) -> bool:
        return (self.every > 0 and t % self.every == 0) or t in self.at


@dataclass
class TrajectoryRecord:
    step: int
    log_norm: float
    values: dict


@dataclass
class Trajectory:
    records: list
    state: TwoRotorState
    aborted_at: int | None = None
    abort_reason: str | None = None

    @property
    def completed(self) -> bool:
        return self.aborted_at is None

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Steps and values of one scalar observer."""
        pts = [(r.step, r.values[name]) for r in self.records if name in r.values]
        if not pts:
            return np.array([], dtype=int), np.array([])
        t, v = zip(*pts)
        return np.array(t), np.array(v)


def evolve(state: TwoRotorState, n_steps: int, prop: PrecomputedPropagator,
           observers: Sequence[Observer] = (), *, alias_tol: float | None = 1e-8,
           band_fraction: float = 0.05, workers=None, progress=None) -> Trajectory:
    """Iterate `step` ``n_steps`` times, recording observers when due.

    An aliasing violation stops the run; the partial trajectory is returned
    with ``aborted_at`` set to the offending step.
    """
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError(f"n_steps must be a positive integer, got {n_steps}")

    records = []

    def record(t, s):
        values = {ob.name: ob.fn(s) for ob in observers if ob.due(t)}
        if values or t == 0:
            records.append(TrajectoryRecord(t, s.log_norm, values))

    record(0, state)
    for t in range(1, int(n_steps) + 1):
        try:
            state = step(state, prop, alias_tol=alias_tol, band_fraction=band_fraction, workers=workers)
        except AliasingError as err:
            records.append(TrajectoryRecord(t, err.state.log_norm, {}))
            return Trajectory(records, err.state, aborted_at=t, abort_reason=str(err))
        record(t, state)
        if progress is not None:
            progress(t, state)
    return Trajectory(records, state)
