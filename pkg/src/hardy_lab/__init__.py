"""hardy-lab: spectral functional calculus, maximal operators, Whitney
covers and constructive atomic decompositions on finite metric measure
spaces."""

from .space import MetricMeasureSpace, build_space, geometry_report, load_space
from .spectral import (SpectralOperator, apply_profile, fit_heat_constants,
                       from_weighted_graph, heat_kernel, poisson_direct,
                       poisson_subordinated, propagation_tau)
from .profiles import (LPPair, ProfileFunction, bandlimited_admissible,
                       build_admissible, build_dictionary, exp_profile,
                       gaussian_profile, lp_pair, norm_N, rychkov_pair,
                       stein_eta, stein_phi_profile)
from .maximal import (MaximalField, dyadic_t_grid, grand_maximal, hl_maximal,
                      hp_quasinorm, nontangential_maximal, radial_maximal,
                      tangential_maximal)
from .whitney import WhitneyCover, verify_cover, whitney_cover
from .atomic import (Atom, AtomicDecomposition, DecomposeConfig, decompose,
                     level_sets, reconstruct, validate_atom)

__version__ = "0.1.0"
