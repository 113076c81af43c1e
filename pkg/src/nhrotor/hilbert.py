"""Truncated two-rotor Hilbert space.

Amplitudes live on a (2M, 2M) array indexed by the integer momenta
``n1, n2`` in ``[-M, M-1]`` (row ``i`` holds ``n1 = i - M``).  The angle
representation samples the wave function on ``theta_k = 2*pi*k/(2M)``
with the unitary convention ``<theta_k|n> = exp(i*n*theta_k) / sqrt(2M)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.fft as sfft

MOMENTUM = "momentum"
ANGLE = "angle"


class NumericalError(ArithmeticError):
    """Fatal numerical condition (zero or non-finite norm, overflow)."""


class RepresentationError(ValueError):
    """Operation applied to a state held in the wrong basis."""


class TruncationError(ValueError):
    """Initial state does not fit on the momentum grid."""

    def __init__(self, message, truncated_mass):
        super().__init__(message)
        self.truncated_mass = truncated_mass


@dataclass(frozen=True)
class MomentumGrid:
    """Momentum/angle lattice for one rotor, shared by both rotors."""

    M: int
    hbar: float

    @property
    def size(self) -> int:
        return 2 * self.M

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.M, self.M)

    @property
    def p(self) -> np.ndarray:
        return self.n * self.hbar

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size

    def index(self, n: int) -> int:
        """Array index of momentum ``n``."""
        if not -self.M <= n < self.M:
            raise IndexError(f"momentum {n} outside [-{self.M}, {self.M - 1}]")
        return n + self.M


def make_grid(M: int, hbar: float) -> MomentumGrid:
    M = int(M)
    if M < 2:
        raise ValueError(f"M must be >= 2, got {M}")
    size = 2 * M
    if size & (size - 1):
        raise ValueError(f"2M = {size} is not a power of two")
    if not hbar > 0:
        raise ValueError(f"hbar must be positive, got {hbar}")
    return MomentumGrid(M, float(hbar))


@dataclass(frozen=True)
class TwoRotorState:
    """Unit-norm amplitudes plus the log of the norm shed so far.

    The true (unnormalized) state is ``exp(log_norm) * amps``.
    """

    grid: MomentumGrid
    amps: np.ndarray = field(repr=False)
    log_norm: float = 0.0
    representation: str = MOMENTUM

    def __post_init__(self):
        shape = (self.grid.size, self.grid.size)
        if self.amps.shape != shape:
            raise ValueError(f"amplitude array has shape {self.amps.shape}, expected {shape}")
        if self.representation not in (MOMENTUM, ANGLE):
            raise ValueError(f"unknown representation {self.representation!r}")

    def amplitude(self, n1: int, n2: int) -> complex:
        if self.representation != MOMENTUM:
            raise RepresentationError("amplitude() needs the momentum representation")
        return complex(self.amps[self.grid.index(n1), self.grid.index(n2)])


def _require(state, representation):
    if state.representation != representation:
        raise RepresentationError(
            f"state is in the {state.representation} representation, expected {representation}"
        )


def to_angle(state: TwoRotorState, workers=None) -> TwoRotorState:
    _require(state, MOMENTUM)
    amps = sfft.ifft2(sfft.ifftshift(state.amps), norm="ortho", workers=workers)
    return replace(state, amps=amps, representation=ANGLE)


def to_momentum(state: TwoRotorState, workers=None) -> TwoRotorState:
    _require(state, ANGLE)
    amps = sfft.fftshift(sfft.fft2(state.amps, norm="ortho", workers=workers))
    return replace(state, amps=amps, representation=MOMENTUM)


def from_amplitudes(grid: MomentumGrid, amps, representation=MOMENTUM) -> TwoRotorState:
    """Wrap an arbitrary amplitude array, normalizing it (log_norm starts at 0)."""
    amps = np.array(amps, dtype=complex)
    state = TwoRotorState(grid, amps, 0.0, representation)
    state, _ = renormalize(state)
    return replace(state, log_norm=0.0)


def basis_state(grid: MomentumGrid, n1: int, n2: int) -> TwoRotorState:
    amps = np.zeros((grid.size, grid.size), dtype=complex)
    amps[grid.index(n1), grid.index(n2)] = 1.0
    return TwoRotorState(grid, amps)


def ground_product_state(grid: MomentumGrid) -> TwoRotorState:
    return basis_state(grid, 0, 0)


def entangled_gaussian_state(grid: MomentumGrid, sigma: float, tail_tol: float = 1e-8) -> TwoRotorState:
    """Gaussian superposition on the shifted diagonal ``|n, n+1>``.

    Component ``(n, n+1)`` carries ``exp(-n**2 / sigma)`` for
    ``n in [-M, M-2]``.  Raises `TruncationError` when the mass cut off by
    the grid exceeds ``tail_tol``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    M = grid.M
    # reference sum over a range wide enough that the exponent drops below -80
    reach = max(M + 2, int(math.ceil(math.sqrt(40.0 * sigma))) + 2)
    k = np.arange(-reach, reach + 1)
    weights = np.exp(-2.0 * k.astype(float) ** 2 / sigma)
    kept = (k >= -M) & (k <= M - 2)
    lost = weights[~kept].sum() / weights.sum()
    if lost > tail_tol:
        raise TruncationError(
            f"grid M={M} truncates {lost:.3e} of the Gaussian mass (tolerance {tail_tol:.1e})",
            lost,
        )
    n = np.arange(-M, M - 1)
    amps = np.zeros((grid.size, grid.size), dtype=complex)
    amps[n + M, n + 1 + M] = np.exp(-n.astype(float) ** 2 / sigma)
    return from_amplitudes(grid, amps)


def norm(state: TwoRotorState) -> float:
    a = state.amps.ravel()
    return math.sqrt(np.vdot(a, a).real)


def renormalize(state: TwoRotorState) -> tuple[TwoRotorState, float]:
    """Scale amplitudes to unit norm; returns the new state and ``ln(norm)``."""
    nrm = norm(state)
    if not (np.isfinite(nrm) and nrm > 0.0):
        raise NumericalError(f"state norm is {nrm}; grid overflow or blow-up")
    increment = math.log(nrm)
    return replace(state, amps=state.amps / nrm, log_norm=state.log_norm + increment), increment


def band_width(grid: MomentumGrid, band_fraction: float = 0.05) -> int:
    """Sites per side in the outer band (``|n| >= (1 - band_fraction) * M``)."""
    return max(1, int(math.ceil(band_fraction * grid.M)))


def boundary_mass(state: TwoRotorState, band_fraction: float = 0.05) -> float:
    """Largest probability held in the outer momentum band of either axis."""
    _require(state, MOMENTUM)
    b = band_width(state.grid, band_fraction)
    a = state.amps
    total = np.vdot(a.ravel(), a.ravel()).real
    rows = np.vdot(a[:b], a[:b]).real + np.vdot(a[-b:], a[-b:]).real
    cols = np.vdot(a[:, :b], a[:, :b]).real + np.vdot(a[:, -b:], a[:, -b:]).real
    return float(max(rows, cols) / total)
