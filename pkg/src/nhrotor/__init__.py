"""Two coupled kicked rotors with complex (gain/loss) kicking.

Quantum Floquet evolution on a truncated momentum grid, reduced-density
observables, the classical map, complex quasienergy spectra, profile fits
and a batch runner.
"""
__version__ = "0.1.0"

from .hilbert import (
    MomentumGrid,
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
from .evolution import (
    AliasingError,
    Observer,
    PrecomputedPropagator,
    SystemParams,
    Trajectory,
    build_propagator,
    evolve,
    step,
)
from .observables import (
    ReducedDensity,
    linear_entropy,
    mean_p1_squared,
    momentum_marginal,
    reduced_density,
    rho_spectrum,
    state_linear_entropy,
)
from .spectral import (
    EigenPair,
    FloquetMatrix,
    build_floquet_matrix,
    dominant_eigenpair,
    dominant_from_params,
    eig_full,
    fidelity,
    quasienergy,
)
