"""Online allocation of a shared resource pool with credit-fairness auditing."""

from .core import (AllocationTrace, Instance, check_sharing_incentives, is_pareto_efficient,
                   static_utility, utility)
from .credit_audit import audit_explicit, check_osp, refute_credit_existence, sp_probe, sp_search
from .mechanisms import DMMF, LENDRECOUP, SMMF, STATIC, get_mechanism, karma, run
from .metrics import compute_metrics, trace_metrics
from .pswc import PswcProblem, solve

__all__ = [
    "AllocationTrace", "Instance", "check_sharing_incentives", "is_pareto_efficient",
    "static_utility", "utility",
    "audit_explicit", "check_osp", "refute_credit_existence", "sp_probe", "sp_search",
    "DMMF", "LENDRECOUP", "SMMF", "STATIC", "get_mechanism", "karma", "run",
    "compute_metrics", "trace_metrics",
    "PswcProblem", "solve",
]
__version__ = "0.1.0"
