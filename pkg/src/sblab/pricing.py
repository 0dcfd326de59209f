"""Sample-based pricing (the truthful benchmark) and the revelation gap.

A sample-based pricing mechanism posts alpha*s as a take-it-or-leave-it
price. Its revenue on a curve is E_s[alpha*s*q(alpha*s)], computed over
the sample's quantile. The gap report divides the published constants:
the optimal truthful ratio interval by the all-mechanisms interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from sblab.curves import RevenueCurve
from sblab.numerics import integrate


def pricing_revenue(curve: RevenueCurve, alpha: float, tol: float = 1e-9) -> float:
    """Expected revenue of posting alpha*s: int_0^1 alpha v(t) q(alpha v(t)) dt."""
    if not alpha > 0.0:
        raise ValueError("pricing_revenue: alpha must be > 0")

    def integrand(t: float) -> float:
        p = alpha * curve.value(t)
        return p * curve.quantile(p)

    cuts = sorted({0.0, 1.0} | set(curve.kink_quantiles()))
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        part = integrate(integrand, a, b, tol=tol, eps_edge=1e-9)
        if not math.isfinite(part):
            return math.inf
        total += part
    return total


@dataclass(frozen=True)
class GapConstants:
    """Prior-independent approximation ratio intervals for one class."""

    truthful_lb: float
    truthful_ub: float
    all_lb: float
    all_ub: float

    def __post_init__(self) -> None:
        if self.truthful_lb > self.truthful_ub or self.all_lb > self.all_ub:
            raise ValueError("GapConstants: need lb <= ub in each pair")
        if self.all_lb > self.truthful_ub:
            raise ValueError("GapConstants: all-mechanisms lb exceeds truthful ub")


# Published constants: truthful side from the sample-based pricing bounds,
# all-mechanisms side from the sample-bid upper bounds and the imitation
# lower bound 1.0737.
DEFAULT_CONSTANTS = {
    "regular": GapConstants(truthful_lb=1.957, truthful_ub=1.996, all_lb=1.0737, all_ub=1.835),
    "mhr": GapConstants(truthful_lb=1.543, truthful_ub=1.575, all_lb=1.0737, all_ub=1.296),
}


def gap_interval(constants: GapConstants) -> tuple[float, float]:
    """Revelation-gap interval [truthful_lb/all_ub, truthful_ub/all_lb]."""
    return (constants.truthful_lb / constants.all_ub, constants.truthful_ub / constants.all_lb)


def gap_report(constants: dict[str, GapConstants] | None = None) -> dict[str, tuple[float, float]]:
    constants = constants or DEFAULT_CONSTANTS
    return {klass: gap_interval(c) for klass, c in constants.items()}
