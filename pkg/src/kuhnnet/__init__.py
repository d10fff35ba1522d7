"""ReLU networks that interpolate on a Kuhn triangulation and keep the target's modulus of regularity."""

from .analysis import (VerifyOptions, bound_terms, c_d, empirical_lipschitz, extrapolation_excess,
                       generalization_bound, sup_error_scan, verify_all)
from .baseline import TriflingSpec, build_pi_k, build_projection_pk, build_sota, in_trifling
from .builder import (BuildReport, build_approximator, build_approximator_shaped, build_global,
                      build_hat_net, check_structure, encode)
from .errors import CapacityError, DomainError, InputError, KuhnnetError, ParseError, ResourceError
from .gadgets import (Samples1D, build_max_net, build_median_net, build_memorizer_2layer,
                      build_memorizer_deep, build_memorizer_sqrt, deep_capacity)
from .kuhn import KuhnSimplexRef, SampleGrid, cpwl_eval, exact_lipschitz_l1, hat_value, locate_simplex
from .modulus import Modulus, eval_modulus, holder_modulus, lipschitz_modulus, min_concave_from_grid
from .net import (Layer, ReluNet, count_nonzero_params, depth, deserialize, evaluate, param_max_norm,
                  serialize, width, widthvec)
from .report import Check, VerificationReport

__version__ = "0.1.0"
