"""Numerical toolkit for rearrangements, slowly varying weights, the sigma map,
K-functionals, the operators U, T, S and the verification campaigns built on them."""

from .errors import (DomainError, InvalidArgument, NonIntegrableWeight, PreconditionViolation,
                     ResolutionTooCoarse, RikitError, UnsupportedAssociate, UnsupportedSpace)
from .grid import Grid, QuadratureResult, StepFunction, compose_with_monotone, integrate, make_grid
from .rearrange import (distribution, hardy_lemma_check, hlp_check, maximal_rearrangement,
                        rearrangement)
from .karamata import (ONE, SV, BpReport, ell, ell_pow, eval_sv, in_class_Bp,
                       sv_from_json, sv_integral_property_check)
from .sigma import (SigmaMap, bp_remark_c_check, build_sigma, sigma_domination_check,
                    sigma_inverse_asymptotic_check)
from .spaces import (Associate, Lebesgue, OrliczKaramata, PowerSpace, associate_norm_estimate,
                     holder_check, norm, space_from_json)
from .kfunc import (KEstimate, k_bruteforce, k_explicit_karamata, k_inequality_chain_check,
                    k_lp_linf)
from .operators import (ConstantReport, OperatorHandle, S_star_handle, T_handle, U_handle,
                        gaussibility_check, op_S, op_T, op_U)
from .dictionary import dual_dictionary, function_dictionary
from .scenario import CampaignReport, Scenario, gaussian_scenario
from .campaigns import (bp_example_table, gaussian_preset_report, gaussibility_campaign,
                        kfunc_campaign, sigma_campaign, verify_main_theorem_links,
                        verify_S_dominated_by_U)

__version__ = "0.1.0"
