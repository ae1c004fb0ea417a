"""Bayesian pairwise alignment of noisy 1-D functions.

The package separates phase from amplitude variability through the
square-root velocity representation, samples the posterior over warping
functions with a sphere-geometry Hamiltonian Monte Carlo kernel, captures
multiple alignment solutions by pooling parallel chains, and ships a
dynamic-programming baseline for comparison.
"""

from .basis import (
    Basis,
    PriorSpectrum,
    TangentCoeffs,
    coeffs_to_function,
    eval_basis,
    prior_spectrum,
    project_to_coeffs,
)
from .errors import (
    BayesAlignError,
    InjectivityError,
    InvalidInputError,
    NumericalError,
)
from .sphere import (
    KarcherResult,
    Psi,
    TangentFunction,
    Warping,
    cluster_modes,
    exp_map,
    gamma_to_psi,
    geodesic_dist,
    identity_warping,
    inv_exp_map,
    karcher_center,
    psi_to_gamma,
)
from .srvf import (
    Grid,
    SampledFunction,
    Srvf,
    derivative,
    from_srvf,
    l2_dist,
    sse,
    to_srvf,
    warp_function,
    warp_srvf,
)

__version__ = "0.1.0"
