"""Single-item, single-agent, single-sample pricing lab.

Revenue curves in quantile space, the sample-bid mechanism and its best
responses, grid-certified approximation bounds for MHR and regular
distributions, the general prior-independent lower bound, and the
revelation-gap report.
"""

from sblab.curves import DistributionSpec, RevenueCurve, build, expected_value, scale, validate
from sblab.mechanism import (
    TOP,
    BestResponse,
    MechanismEval,
    best_response,
    best_response_brute,
    evaluate,
    expected_payment,
    mechanism_revenue,
    opt_revenue,
    utility,
)

__all__ = [
    "DistributionSpec",
    "RevenueCurve",
    "build",
    "expected_value",
    "scale",
    "validate",
    "TOP",
    "BestResponse",
    "MechanismEval",
    "best_response",
    "best_response_brute",
    "evaluate",
    "expected_payment",
    "mechanism_revenue",
    "opt_revenue",
    "utility",
]

__version__ = "0.1.0"
