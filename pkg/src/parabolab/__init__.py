"""parabolab: a numerical laboratory for backward uniqueness of parabolic
operators with non-Lipschitz time regularity.

The package builds and cross-checks every explicit object in that story:
moduli of continuity and their Osgood classification, the weight function
solving Phi'' = mu(1/Phi') Phi'^2 (with finite-time blow-up exactly off the
Osgood class), the Fourier symbols and their time mollification, the
integration-by-parts energy identity behind the Carleman estimate, and the
non-uniqueness counterexample with its admissibility conditions.
"""

from ._kernels import IMPL as kernel_impl
from .errors import (BlowUpExceededError, DomainError, EllipticityViolationError,
                     InadmissibleModulusError, ParabolabError, QuadratureError,
                     RepresentabilityError, SearchFailureError, ValidationError)
from .modulus import (EmpiricalModulus, ModulusSpec, OsgoodVerdict,
                      ValidationReport, classify_osgood, concave_envelope,
                      empirical_modulus, envelope_value, eval_modulus,
                      osgood_integral, validate_modulus)
from .weight import (WeightFunction, WeightReport, build_weight, eta,
                     eta_inverse, verify_weight, weight_eval)
from .symbol import (BoundsReport, CoefficientPath, EllipticityData,
                     MollifiedPath, TimePath, bump, bump_derivative,
                     ellipticity_constants, epsilon_schedule, heat_path,
                     mollifier_bounds_check, mollify_path, rho_k, sigma)
from .carleman import (DecompositionResult, ModeProfile, ScanTable,
                       decomposition_check, evolve_mode, make_profiles,
                       ratio_scan)
from .counterexample import (ConditionReport, CounterexampleField, CutoffSet,
                             SequencePlan, build_cutoffs, build_field,
                             build_sequences, check_conditions,
                             eval_lower_order, eval_solution,
                             regularity_report, solve_k0)

__version__ = "0.1.0"
