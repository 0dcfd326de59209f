"""The sample-bid mechanism engine.

The seller draws a hidden sample s from the agent's distribution, the
agent bids b, wins iff b >= s, and pays alpha * min(b, s) regardless of
allocation. Everything is computed in quantile space: a bid b maps to
q_b = P[s > b], the allocation is 1 - q_b, and the expected payment is

    p(b) = alpha * ( b * q_b + int_{q_b}^1 R(t)/t dt ).

"Bid infinity" (any bid at or above the top of the sample's support) is
encoded as TOP = math.inf; its payment is alpha * E[s], an infinite
sentinel when E[s] diverges.

Best responses compare a closed-form candidate set: bid 0, TOP, the
first-order-condition root of each smooth curve piece (v = alpha *
(v(q) - R'(q)), at most one root per piece), and every kink quantile.
Utility ties within tol are broken toward the lowest expected payment,
which is adversarial for the seller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from sblab.curves import RevenueCurve
from sblab.numerics import bisect_predicate, integrate

TOP = math.inf

UTILITY_TIE_TOL = 1e-9
REVENUE_TOL = 1e-9


@dataclass(frozen=True)
class BestResponse:
    bid: float  # TOP (= inf) means any bid at/above the support top
    utility: float
    kind: str  # zero | interior_root | kink | top
    tie_break_applied: bool
    q_bid: float  # quantile of the bid; 1.0 for bid 0, 0.0 for TOP
    payment: float


@dataclass(frozen=True)
class MechanismEval:
    revenue: float
    opt_revenue: float
    ratio: float
    alpha: float


def expected_payment(b: float, curve: RevenueCurve, alpha: float) -> float:
    """Expected payment alpha * E[min(b, s)]; non-decreasing in b."""
    if b <= 0.0:
        return 0.0
    if math.isinf(b) or b >= curve.top_value():
        ev = curve.ev
        return alpha * ev if math.isfinite(ev) else math.inf
    q_b = curve.quantile(b)
    return alpha * (b * q_b + curve.pay_integral(q_b, 1.0))


def _payment_at_quantile(curve: RevenueCurve, q_b: float, bid: float, alpha: float) -> float:
    if q_b <= curve.support_top_quantile:
        ev = curve.ev
        return alpha * ev if math.isfinite(ev) else math.inf
    return alpha * (bid * q_b + curve.pay_integral(q_b, 1.0))


def utility(v: float, b: float, curve: RevenueCurve, alpha: float) -> float:
    """Expected utility of value v bidding b; exactly 0 for b = 0."""
    if b <= 0.0:
        return 0.0
    if math.isinf(b) or b >= curve.top_value():
        pay = expected_payment(TOP, curve, alpha)
        return v - pay if math.isfinite(pay) else -math.inf
    q_b = curve.quantile(b)
    return v * (1.0 - q_b) - alpha * (b * q_b + curve.pay_integral(q_b, 1.0))


def _candidates(v: float, curve: RevenueCurve, alpha: float):
    """Candidate (q_bid, bid, kind) triples covering every possible argmax."""
    out = [(1.0, 0.0, "zero"), (curve.support_top_quantile, TOP, "top")]
    k_target = v / alpha
    for p in curve.pieces:
        q = p.foc_root(k_target)
        if q is not None:
            out.append((q, curve.value(q), "interior_root"))
    for q in curve.kink_quantiles():
        out.append((q, curve.value(q), "kink"))
    return out


def best_response(
    v: float,
    curve: RevenueCurve,
    alpha: float,
    tie_tol: float = UTILITY_TIE_TOL,
) -> BestResponse:
    """Utility-maximizing bid with the seller-adversarial tie-break."""
    best = None  # (utility, payment, q_bid, bid, kind)
    scored = []
    for q_b, bid, kind in _candidates(v, curve, alpha):
        if kind == "zero":
            u, pay = 0.0, 0.0
        else:
            pay = _payment_at_quantile(curve, q_b, bid, alpha)
            u = v * (1.0 - q_b) - pay if math.isfinite(pay) else -math.inf
        scored.append((u, pay, q_b, bid, kind))
        if best is None or u > best[0]:
            best = scored[-1]
    assert best is not None
    contenders = [s for s in scored if s[0] >= best[0] - tie_tol]
    pick = min(contenders, key=lambda s: s[1])
    tie = len(contenders) > 1 and any(s[3] != pick[3] for s in contenders)
    return BestResponse(
        bid=pick[3],
        utility=pick[0],
        kind=pick[4],
        tie_break_applied=tie,
        q_bid=pick[2],
        payment=pick[1],
    )


def best_response_brute(
    v: float,
    curve: RevenueCurve,
    alpha: float,
    n_bids: int = 10_000,
    tie_tol: float = UTILITY_TIE_TOL,
) -> BestResponse:
    """Grid-search oracle over {0, TOP} and a geometric+uniform bid grid.

    The grid is truncated at the cheapest bid whose expected payment
    reaches v: anything above is dominated by bidding 0.
    """
    if n_bids < 2:
        raise ValueError("best_response_brute: n_bids must be >= 2")

    def affordable(q: float) -> bool:
        return _payment_at_quantile(curve, q, curve.value(q), alpha) >= v

    if v > 0.0 and affordable(1.0 - 1e-12):
        b_max = curve.bottom_value()
    elif v > 0.0 and not affordable(1e-9):
        b_max = curve.value(1e-9)
    else:
        q_pay = bisect_predicate(affordable, 1e-9, 1.0 - 1e-12, tol=1e-12)
        b_max = curve.value(q_pay)
    b_max = max(b_max, 1e-9)

    n_uni = n_bids // 2
    n_geo = n_bids - n_uni
    bids = [b_max * (i + 1) / n_uni for i in range(n_uni)]
    bids += [b_max * 10.0 ** (-8.0 * (1.0 - i / max(n_geo - 1, 1))) for i in range(n_geo)]

    scored = [(0.0, 0.0, 1.0, 0.0, "zero")]
    pay_top = expected_payment(TOP, curve, alpha)
    u_top = v - pay_top if math.isfinite(pay_top) else -math.inf
    scored.append((u_top, pay_top, curve.support_top_quantile, TOP, "top"))
    for b in bids:
        u = utility(v, b, curve, alpha)
        pay = expected_payment(b, curve, alpha)
        scored.append((u, pay, curve.quantile(b), b, "interior_root"))

    best_u = max(s[0] for s in scored)
    contenders = [s for s in scored if s[0] >= best_u - tie_tol]
    pick = min(contenders, key=lambda s: s[1])
    tie = len(contenders) > 1 and any(s[3] != pick[3] for s in contenders)
    return BestResponse(pick[3], pick[0], pick[4], tie, pick[2], pick[1])


def opt_revenue(curve: RevenueCurve) -> float:
    """Myerson-optimal (monopoly posted price) revenue R(q_m)."""
    return curve.q_m * curve.v_m


def _bid_of_quantile(curve: RevenueCurve, q: float, alpha: float) -> BestResponse:
    return best_response(curve.value(q), curve, alpha)


def mechanism_revenue(curve: RevenueCurve, alpha: float, tol: float = REVENUE_TOL) -> float:
    """Expected revenue: int_0^1 payment(best_response(v(q))) dq.

    Bids are non-increasing in q, so payments are positive on a prefix
    [0, q_z). The integrand can jump where the best response switches
    branches (at the critical value whose bid first reaches the monopoly
    reserve, and at the zero switch), so the integral is split there.
    """
    eps = 1e-9

    def bid_positive(q: float) -> bool:
        return _bid_of_quantile(curve, q, alpha).bid > 0.0

    def bid_high(q: float) -> bool:
        br = _bid_of_quantile(curve, q, alpha)
        return br.bid >= curve.v_m

    if not bid_positive(eps):
        return 0.0
    q_z = bisect_predicate(bid_positive, eps, 1.0 - eps, tol=1e-12)
    q_star = bisect_predicate(bid_high, eps, min(q_z, 1.0 - eps), tol=1e-12)

    def integrand(q: float) -> float:
        br = _bid_of_quantile(curve, q, alpha)
        return br.payment if math.isfinite(br.payment) else 0.0

    cuts = sorted({0.0, q_star, q_z} | {k for k in curve.kink_quantiles() if k < q_z})
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        if b - a > 1e-12:
            total += integrate(integrand, a, b, tol=tol, eps_edge=1e-9)
    return total


def evaluate(curve: RevenueCurve, alpha: float, tol: float = REVENUE_TOL) -> MechanismEval:
    rev = mechanism_revenue(curve, alpha, tol)
    opt = opt_revenue(curve)
    return MechanismEval(revenue=rev, opt_revenue=opt, ratio=opt / rev, alpha=alpha)


def myerson_identity_check(curve: RevenueCurve, alpha: float, tol: float = 1e-9) -> float:
    """|revenue-by-payments - (virtual surplus + payment of lowest type)|.

    The virtual surplus is int_0^1 R'(q) * alloc(q) dq with alloc(q) the
    allocation of the value at quantile q under its best response.
    """
    rev = mechanism_revenue(curve, alpha, tol=tol)

    eps = 1e-9

    def alloc(q: float) -> float:
        return 1.0 - _bid_of_quantile(curve, q, alpha).q_bid

    def bid_positive(q: float) -> bool:
        return _bid_of_quantile(curve, q, alpha).bid > 0.0

    def bid_high(q: float) -> bool:
        return _bid_of_quantile(curve, q, alpha).bid >= curve.v_m

    q_z = bisect_predicate(bid_positive, eps, 1.0 - eps, tol=1e-12) if bid_positive(eps) else 0.0
    q_star = bisect_predicate(bid_high, eps, max(q_z, eps), tol=1e-12) if q_z > 0.0 else 0.0

    def integrand(q: float) -> float:
        return curve.marginal(q) * alloc(q)

    cuts = sorted({0.0, 1.0, q_star, q_z} | set(curve.kink_quantiles()))
    surplus = 0.0
    for a, b in zip(cuts, cuts[1:]):
        if b - a > 1e-12:
            surplus += integrate(integrand, a, b, tol=tol, eps_edge=1e-9)

    lowest = _bid_of_quantile(curve, 1.0 - 1e-12, alpha)
    p_lowest = lowest.payment if math.isfinite(lowest.payment) else 0.0
    return abs(rev - (surplus + p_lowest))
