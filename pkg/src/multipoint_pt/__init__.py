"""Multipoint density-matrix perturbation theory for parametrized Hermitian eigenproblems."""

from .alpha_fit import AlphaFitResult, fit_alpha
from .contour import Contour, contour_integrate, default_contour
from .errors import *  # noqa: F401,F403
from .multipoint import (
    MultipointExpansion,
    MultipointSetup,
    SmallnessParameters,
    build_setup,
    conjugate_setup,
    expansion_terms,
    integral_i2,
    integral_i3,
    multipoint_resolvent,
    operators_at_z,
    smallness,
)
from .operators import (
    GapWindow,
    NormContext,
    SpectralData,
    cross_pseudo_inverse,
    decompose,
    gap_check,
    kij_from_kj,
    norm_a,
    norm_e,
    relative_distance,
    resolvent,
    resolvent_bound_rhs,
    shared_window,
)
from .schrodinger import (
    PlanewaveBasis,
    PotentialSpec,
    laplacian_matrix,
    default_potentials,
    potential_matrix,
)
from .standard import ClosestRule, StandardExpansion, choose_closest, standard_terms

__version__ = "0.1.0"
