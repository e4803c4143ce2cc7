"""
Exact and Monte Carlo Palm calculus for stationary tail measures on finite
Abelian groups.

Homogeneous measures are stored as finite sums of weighted Pareto rays, so
every identity between them reduces to closed-form radial integrals.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .group_field import (SCALAR, Cone, Field, Group, exceedance_count, exceedance_support,
                          normalize_to_W, scale, shift, support_measure)
from .ray_measure import (Atom, Ray, RayMeasure, ThresholdFunctional, TruncatedRayLaw,
                          canonicalize, exceedance_mass, integrate, is_homogeneous,
                          is_stationary, mass, measures_equal, normalize, palm_of_exceedance,
                          sigma_finite_layers, stationarize)
from .families import (TestFunction, TestFunctionFamily, canary_family, field_family,
                       match_indicators, pair_family)
from .palm_calculus import (IdentityReport, argmax_allocation, check_allocation,
                            check_exchange, check_inversion_roundtrip, check_mecke,
                            check_refined_campbell, identity_allocation, invert_palm)
from .spectral import (AnchorFunction, FieldLaw, SpectralLaw, argmax_anchor, build_Q,
                       check_mecke7, check_space_shift, extract_spectral_decomposition,
                       first_exceedance_anchor, moving_shift_representation,
                       spectral_representation, tail_from_anchor, tail_from_H,
                       tail_from_weight)
from .anchoring import (AnchoredLaw, anchor_density, anchored_palm, check_anchor_covariance,
                        extremal_index_direct, extremal_index_kappa)
from .montecarlo import Estimate, SamplerSpec, estimate_identity, estimate_theta, sample_Q
