"""Grid certification of the sample-bid revenue guarantee for regular priors.

All curves are normalized so the optimal revenue is 1 (v_m = 1/q_m).
The parameter space splits at monopoly quantile 0.62.

Large regime (q_m >= 0.62), two branches:
  A. Curves whose critical value sits at or below the monopoly reserve:
     revenue >= -0.7 ln(q_m) q_m / (1 - q_m), minimized at q_m = 0.62.
  B. Curves reduced to the r0-line family R = r0 + (1-r0) q/q_m (then
     flat 1). Per (q_m, r0) box: a feasibility test for "critical value
     above the reserve" (the set S) and, inside S, a certified lower
     bound tau = p_lb(v*) * q_lb(v*) built from worst-corner evaluations
     of the family's closed forms.

Small regime (q_m <= 0.62): cells over (q_m, q'', w) where q'' is the
quantile of v_m/0.7 and w = int_{q''}^{q_m} R(q)/q dq. Each cell gets a
certified upper bound on the critical value v*, payment and quantile
lower bounds, and a tail of payments from pentagon-curve bid lower
bounds. The case v* >= v_m/0.7 must be certified empty.

Two transcription slips in the source bounds are corrected here (both
verified by exact-equality oracles against the engine on the binding
curves): the truncated-welfare payment bound for bidding v_m/0.7 carries
an extra -0.7, and the quantile bound for v in [v_m, v_m/0.7] is the
chord-curve quantile k*q''/(v(q_m - q'') - 1 + q''/(0.7 q_m)), k = 3/7.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sblab.curves import RevenueCurve
from sblab.mechanism import utility as mech_utility
from sblab.report import CertReport

ALPHA_REGULAR = 0.7
REGULAR_TARGET = 0.545
Q_SPLIT = 0.62


@dataclass(frozen=True)
class RegularGrid:
    q_m_step: float   # small-regime q_m step and large-regime box width
    r0_step: float    # large-regime r0 box width
    n_qpp: int        # q'' nodes per q_m
    n_w: int          # w nodes per (q_m, q'')
    n_qhat: int       # q-hat nodes for the critical-value condition
    n_scan: int       # geometric v-ladder size
    pent: tuple[int, int, int]  # pentagon (q0, qk, rk) grid
    n_qgrid: int      # q nodes for the pentagon-payment tail
    n_qm_env: int     # coarse q_m columns for the pentagon envelope


SCALES = {
    "coarse": RegularGrid(2.5e-2, 2.5e-2, 28, 8, 80, 48, (6, 16, 16), 100, 8),
    "default": RegularGrid(5e-3, 5e-3, 140, 20, 200, 64, (10, 32, 32), 200, 16),
    "fine": RegularGrid(2.5e-3, 2.5e-3, 280, 40, 400, 96, (14, 48, 48), 400, 32),
}


def _log_over_one_minus(q):
    """ln(q)/(1-q), with the series value -1 - (1-q)/2 - ... near q = 1."""
    q = np.asarray(q, dtype=float)
    one_m = 1.0 - q
    small = np.abs(one_m) < 1e-7
    out = np.empty_like(q)
    out[~small] = np.log(q[~small]) / one_m[~small]
    e = one_m[small]
    out[small] = -1.0 - e / 2.0 - e * e / 3.0
    return out


# ---------------------------------------------------------------------------
# Closed-form lower bounds (spec operations, scalar)
# ---------------------------------------------------------------------------


def payment_lb_low(b: float, q_m: float) -> float:
    """Payment lower bound for a bid b <= v_m on a concave normalized curve."""
    if b <= 0.0:
        return 0.0
    s = 1.0 - q_m
    if s < 1e-9:
        return 0.7 * b * (1.0 - 0.5 * b * s)
    return 0.7 * math.log1p(b * s) / s


def payment_lb_vm_over_alpha(q_m: float, q_pp: float, w: float) -> float:
    """Payment lower bound for bidding v_m/0.7 given the (q'', w) diagnostics."""
    return q_pp / q_m + 0.7 * w - 0.7 * float(_log_over_one_minus(q_m)) - 0.7


def quantile_lb(v: float, q_m: float, q_pp: float = 0.0) -> float:
    """Quantile lower bound for value v on a concave normalized curve.

    v <= v_m uses the bottom chord curve; v in [v_m, v_m/0.7] uses the
    chord through (q'', q'' v_m/0.7) and (q_m, 1). Values above v_m/0.7
    are outside the lemma's range.
    """
    v_m = 1.0 / q_m
    if v < 0.0:
        raise ValueError("quantile_lb: v must be >= 0")
    if v <= v_m:
        return 1.0 / (1.0 + v * (1.0 - q_m))
    if v > v_m / 0.7 + 1e-9:
        raise ValueError("quantile_lb: out of lemma range (v > v_m/0.7)")
    k = 1.0 / 0.7 - 1.0
    den = v * (q_m - q_pp) - 1.0 + q_pp / (0.7 * q_m)
    if den <= 0.0 or (q_pp == 0.0 and abs(v - v_m) < 1e-12):
        return q_m
    return min(k * q_pp / den, q_m)


def _pvm(q_m: float) -> float:
    # payment_lb_low at the monopoly reserve simplifies to 0.7 ln(1/q_m)/(1-q_m)
    return -0.7 * float(_log_over_one_minus(q_m))


# ---------------------------------------------------------------------------
# Critical value upper bound
# ---------------------------------------------------------------------------


def _chs_margin(v, q_pp, w, q_m: float, q_hat):
    """LHS - RHS of the high-bid dominance condition, broadcast over q_hat.

    LHS is the exact utility of bidding v_m/0.7 on the surrogate curve
    (original below q_m, flat 1 to q_hat, chord to (1, 0)); RHS is the
    utility of the best bid below v_m/0.7 on that surrogate.
    """
    v = np.asarray(v, dtype=float)[..., None]
    q_pp = np.asarray(q_pp, dtype=float)[..., None]
    w = np.asarray(w, dtype=float)[..., None]
    q_hat = np.asarray(q_hat, dtype=float)
    v_m = 1.0 / q_m
    one_m = 1.0 - q_hat
    lhs = (
        v * (1.0 - q_pp)
        - v_m * q_pp
        - 0.7 * (w + np.log(q_hat / q_m) - _log_over_one_minus(q_hat) - 1.0)
    )
    b = np.minimum(1.0 / q_hat, np.maximum(0.0, v / 0.7 - 1.0 / one_m))
    q_t = 1.0 / (1.0 + b * one_m)
    rhs = v * (1.0 - q_t) + 0.7 * np.log(q_t) / one_m
    return lhs - rhs


def _chs_qhat_max(v: np.ndarray, q_m: float, n_qhat: int) -> np.ndarray:
    """M(v) = max over q_hat of the cell-independent side of the condition.

    The dominance condition factorizes as
        v (1 - q'') - q''/q_m - 0.7 w  >=  M(v),
    M(v) = max_qhat [ 0.7 (ln(qhat/q_m) - ln(qhat)/(1-qhat) - 1)
                      + v (1 - q_t) + 0.7 ln(q_t)/(1-qhat) ].
    M is non-decreasing in v (envelope of utilities with allocation
    1 - q_t >= 0), which the cell solver relies on.
    """
    q_hat = np.linspace(q_m, 1.0 - 1e-9, n_qhat)
    one_m = 1.0 - q_hat
    const = 0.7 * (np.log(q_hat / q_m) - _log_over_one_minus(q_hat) - 1.0)
    vv = v[:, None]
    b = np.minimum(1.0 / q_hat, np.maximum(0.0, vv / 0.7 - 1.0 / one_m))
    q_t = 1.0 / (1.0 + b * one_m)
    expr = const + vv * (1.0 - q_t) + 0.7 * np.log(q_t) / one_m
    return expr.max(axis=1)


def _critical_value_arrays(
    q_m: float,
    q_pp: np.ndarray,
    w: np.ndarray,
    n_qhat: int,
    n_scan: int,
    cap_mult: float = 10.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell certified upper bound on v*, plus an 'unbounded' flag.

    Using the factorized condition a*v - c0 >= M(v) with a = 1 - q'',
    c0 = q''/q_m + 0.7 w: on each ladder interval (v_k, v_{k+1}] replace
    M(v) by M(v_{k+1}) (monotonicity), so the smallest admissible v there
    is (M(v_{k+1}) + c0)/a, available in closed form per cell.
    """
    v_m = 1.0 / q_m
    cap = cap_mult * v_m
    lo0 = 0.002 * v_m
    ladder = lo0 * (cap / lo0) ** np.linspace(0.0, 1.0, n_scan)
    m_vals = _chs_qhat_max(ladder, q_m, n_qhat)

    q_pp_b, w_b = np.broadcast_arrays(q_pp, w)
    a = (1.0 - q_pp_b)[..., None]
    c0 = (q_pp_b / q_m + 0.7 * w_b)[..., None]
    # smallest v in (v_k, v_{k+1}] satisfying the conservative condition
    need = (m_vals[1:] + c0) / a
    v_lo = ladder[:-1]
    v_hi = ladder[1:]
    cand = np.maximum(need, v_lo)
    valid = cand <= v_hi
    cand = np.where(valid, cand, np.inf)
    v_bar = cand.min(axis=-1)
    unbounded = ~np.isfinite(v_bar)
    v_bar = np.where(unbounded, cap, v_bar)
    return v_bar, unbounded


def critical_value_ub(
    q_m: float,
    q_pp: float,
    w: float,
    n_qhat: int = 200,
    n_scan: int = 64,
    cap_mult: float = 10.0,
) -> tuple[float, bool]:
    """Scalar wrapper: certified upper bound on the critical value v*."""
    v, unb = _critical_value_arrays(
        q_m, np.array([q_pp]), np.array([w]), n_qhat, n_scan, cap_mult
    )
    return float(v[0]), bool(unb[0])


# ---------------------------------------------------------------------------
# Pentagon bid lower bound
# ---------------------------------------------------------------------------


def _pentagon_params(q_m: float, n_q0: int, n_qk: int, n_rk: int):
    """Flattened feasible pentagon family with monopoly quantile >= q_m."""
    q0 = q_m + (1.0 - 1e-9 - q_m) * np.linspace(0.0, 1.0, n_q0)
    fr1 = np.linspace(0.0, 1.0, n_qk)
    fr2 = np.linspace(0.0, 1.0, n_rk)
    q0g, f1g, f2g = np.meshgrid(q0, fr1, fr2, indexing="ij")
    qk = q0g + f1g * (1.0 - 1e-9 - q0g)
    r_min = (1.0 - qk) / (1.0 - q0g)
    rk = r_min + f2g * (1.0 - r_min)
    return q0g.ravel(), qk.ravel(), rk.ravel()


def _pentagon_bids(q_arr: np.ndarray, q_m: float, pent: tuple[int, int, int], alpha: float) -> np.ndarray:
    """b_lb(q): min over the pentagon family of the optimal bid for the
    value at quantile q, clipped to [0, 1/q_m]; non-increasing in q."""
    q0, qk, rk = _pentagon_params(q_m, *pent)
    dmid = np.maximum(qk - q0, 1e-15)
    m2 = (rk - 1.0) / dmid
    c2 = 1.0 - m2 * q0
    m3 = -rk / (1.0 - qk)
    c3 = rk / (1.0 - qk)
    i3_qk = c3 * (-np.log(qk)) + m3 * (1.0 - qk)
    i2_q0 = c2 * np.log(qk / q0) + m2 * (qk - q0) + i3_qk

    out = np.empty_like(q_arr)
    tie = 1e-9
    # q = 1 has value 0: the FOC quantiles overflow to inf and are masked out
    with np.errstate(over="ignore", divide="ignore"):
        _pentagon_scan(q_arr, out, q0, qk, rk, c2, m2, c3, m3, i3_qk, i2_q0, alpha, tie)
    return np.minimum(out, 1.0 / q_m)


def _pentagon_scan(q_arr, out, q0, qk, rk, c2, m2, c3, m3, i3_qk, i2_q0, alpha, tie):
    for j, q in enumerate(q_arr):
        # Only pentagons whose flat part ends at or before q are needed:
        # the reduction constructs them with monopoly quantile in [q_m, q].
        mask = q0 <= q + 1e-12
        # agent's value at quantile q on each pentagon
        r_at = np.where(q <= q0, 1.0, np.where(q <= qk, c2 + m2 * q, c3 + m3 * q))
        v = np.maximum(r_at / q, 1e-300)

        def pay_int(t):
            # int_t^1 R/s ds on the pentagon, piecewise
            t = np.clip(t, 1e-300, 1.0)
            on3 = t >= qk
            on2 = (t >= q0) & ~on3
            i3 = c3 * (-np.log(t)) + m3 * (1.0 - t)
            i2 = c2 * np.log(qk / t) + m2 * (qk - t) + i3_qk
            i1 = np.log(q0 / t) + i2_q0
            return np.where(on3, i3, np.where(on2, i2, i1))

        def util(t, b):
            return v * (1.0 - t) - alpha * (b * t + pay_int(t))

        us = []
        bs = []
        # bid zero
        us.append(np.zeros_like(v))
        bs.append(np.zeros_like(v))
        # FOC on the last piece: t = alpha c3 / v
        t3 = alpha * c3 / v
        ok3 = (t3 >= qk) & (t3 <= 1.0)
        b3 = v / alpha + m3
        us.append(np.where(ok3, util(np.where(ok3, t3, 1.0), b3), -np.inf))
        bs.append(b3)
        # FOC on the middle piece
        t2 = alpha * c2 / v
        ok2 = (t2 >= q0) & (t2 <= qk)
        b2 = v / alpha + m2
        us.append(np.where(ok2, util(np.where(ok2, t2, 1.0), b2), -np.inf))
        bs.append(b2)
        # FOC on the flat piece
        t1 = alpha / v
        ok1 = t1 <= q0
        b1 = v / alpha
        us.append(np.where(ok1, util(np.where(ok1, t1, 1.0), b1), -np.inf))
        bs.append(b1)
        # kinks
        us.append(util(q0, 1.0 / q0))
        bs.append(1.0 / q0)
        us.append(util(qk, rk / qk))
        bs.append(rk / qk)

        u_mat = np.stack(us)
        b_mat = np.stack(bs)
        u_best = u_mat.max(axis=0)
        b_mat = np.where(u_mat >= u_best - tie, b_mat, np.inf)
        bid = b_mat.min(axis=0)  # adversarial: lowest bid among near-ties
        bid = np.where(mask, bid, np.inf)
        out[j] = max(float(bid.min()), 0.0)


def pentagon_bid_lb(
    q: float,
    q_m: float,
    pent: tuple[int, int, int] = (10, 32, 32),
    alpha: float = ALPHA_REGULAR,
) -> float:
    """Lower bound on the optimal bid of the value at quantile q, for any
    concave normalized curve with monopoly quantile q_m."""
    if not q_m <= q <= 1.0:
        raise ValueError("pentagon_bid_lb: need q in [q_m, 1]")
    return float(_pentagon_bids(np.array([q]), q_m, pent, alpha)[0])


# ---------------------------------------------------------------------------
# r0-line closed forms (large regime / appendix box method)
# ---------------------------------------------------------------------------


def _u_high_r0line(v, r0, q_m, alpha: float):
    """Exact best utility over bids >= v_m on the r0-line curve.

    u(v, q_b) = v (1 - q_b) - alpha (1 - (1-r0) ln q_m - r0 ln q_b) with
    q_b = min(alpha r0 / v, q_m).
    """
    v = np.asarray(v, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    q_m = np.asarray(q_m, dtype=float)
    q_b = np.minimum(np.where(v > 0, alpha * r0 / np.maximum(v, 1e-300), np.inf), q_m)
    log_qb = np.where(r0 > 0.0, np.log(np.maximum(q_b, 1e-300)), 0.0)
    pay = alpha * (1.0 - (1.0 - r0) * np.log(q_m) - r0 * log_qb)
    return v * (1.0 - q_b) - pay


def _v_star_r0line(r0, q_m, alpha: float, iters: int = 80):
    """Root in v of _u_high_r0line (vectorized bisection)."""
    r0 = np.asarray(r0, dtype=float)
    q_m = np.asarray(q_m, dtype=float)
    shape = np.broadcast(r0, q_m).shape
    lo = np.full(shape, 1e-12)
    hi = np.full(shape, 1.0)
    for _ in range(80):
        bad = _u_high_r0line(hi, r0, q_m, alpha) < 0.0
        if not np.any(bad):
            break
        hi = np.where(bad, hi * 2.0, hi)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = _u_high_r0line(mid, r0, q_m, alpha) >= 0.0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    return 0.5 * (lo + hi)


def r0line_point_bound(r0: float, q_m: float, alpha: float = ALPHA_REGULAR) -> dict:
    """Exact p(v*) q(v*) for one r0-line curve (degenerate box).

    in_branch_b is False when the critical value sits below the reserve,
    i.e. the curve is covered by the closed-form branch A instead.
    """
    v_m = 1.0 / q_m
    v_star = float(_v_star_r0line(np.array(r0), np.array(q_m), alpha))
    in_b = v_star >= v_m - 1e-12
    q_b = min(alpha * r0 / v_star, q_m) if v_star > 0 else q_m
    p = v_star * (1.0 - q_b)
    if r0 > 0.0:
        den = v_star * q_m - (1.0 - r0)
        q_star = r0 * q_m / den if den > 0 else q_m
    else:
        q_star = q_m if v_star <= v_m + 1e-9 else 0.0
    return {
        "v_star": v_star,
        "p_lb": p,
        "q_star": min(q_star, q_m),
        "tau": p * min(q_star, q_m),
        "in_branch_b": in_b,
    }


def branch_a_bound(q_m: float) -> float:
    """-0.7 ln(q_m) q_m / (1 - q_m), continuously extended to 0.7 at 1."""
    return -0.7 * q_m * float(_log_over_one_minus(q_m))


def verify_regular_large(
    alpha: float = ALPHA_REGULAR,
    grid_scale: str = "default",
    certified: bool = False,
    target: float = REGULAR_TARGET,
) -> CertReport:
    """Large regime q_m >= 0.62: branch A closed form plus r0-line boxes."""
    g = SCALES[grid_scale]
    n_q = max(int(round((1.0 - Q_SPLIT) / g.q_m_step)), 2)
    q_edges = np.linspace(Q_SPLIT, 1.0, n_q + 1)
    branch_a = float(np.min([branch_a_bound(q) for q in q_edges]))

    n_r = max(int(round(1.0 / g.r0_step)), 2)
    r_edges = np.linspace(0.0, 1.0, n_r + 1)

    if certified:
        q_lo, q_hi = np.meshgrid(q_edges[:-1], r_edges[:-1], indexing="ij")[0], None
        q_lo = np.repeat(q_edges[:-1], n_r)
        q_hi = np.repeat(np.minimum(q_edges[1:], 1.0 - 1e-12), n_r)
        r_lo = np.tile(r_edges[:-1], n_q)
        r_hi = np.tile(r_edges[1:], n_q)
    else:
        q_lo = q_hi = np.repeat(np.minimum(q_edges, 1.0 - 1e-12), n_r + 1)
        r_lo = r_hi = np.tile(r_edges, n_q + 1)

    # set S membership: some curve in the box can have v* >= v_m
    v_m_min = 1.0 / q_hi
    in_s = _u_high_r0line(v_m_min, r_hi, q_lo, alpha) <= 0.0
    tau = np.full(q_lo.shape, np.inf)
    if np.any(in_s):
        v_bar = _v_star_r0line(r_hi[in_s], q_lo[in_s], alpha)
        v_lo_star = _v_star_r0line(r_lo[in_s], q_hi[in_s], alpha)
        den = v_bar * q_hi[in_s] - (1.0 - r_lo[in_s])
        q_star = np.where(
            (r_lo[in_s] > 0.0) & (den > 0.0),
            r_lo[in_s] * q_hi[in_s] / np.maximum(den, 1e-300),
            np.where(r_lo[in_s] > 0.0, q_hi[in_s], 0.0),
        )
        q_star = np.minimum(q_star, q_hi[in_s])
        p_lb = np.maximum(v_lo_star - alpha * r_hi[in_s], v_lo_star * (1.0 - q_hi[in_s]))
        tau[in_s] = p_lb * q_star

    branch_b = float(tau.min()) if np.any(in_s) else math.inf
    i = int(np.argmin(tau)) if np.any(in_s) else -1
    min_bound = min(branch_a, branch_b)
    argmin = (
        {"branch": "A", "q_m": Q_SPLIT}
        if branch_a <= branch_b
        else {"branch": "B", "q_m": float(q_lo[i]), "r0": float(r_lo[i])}
    )
    return CertReport(
        alpha=alpha,
        target=target,
        min_bound=min_bound,
        argmin=argmin,
        passed=min_bound >= target,
        n_cells=int(q_lo.size),
        grid={"scale": grid_scale, "certified": certified},
        extra={
            "branch_minima": {"branch_a": branch_a, "branch_b": branch_b},
            "n_in_s": int(np.count_nonzero(in_s)),
        },
    )


# ---------------------------------------------------------------------------
# Small regime
# ---------------------------------------------------------------------------


def _tail_cumulative(q_grid: np.ndarray, b_lb: np.ndarray, q_m: float, certified: bool) -> np.ndarray:
    """C(x) = int_x^1 payment_lb_low(b_lb(q), q_m) dq on the grid nodes.

    Certified mode uses the right-endpoint rule, an underestimate because
    the integrand is non-increasing in q.
    """
    s = 1.0 - q_m
    pll = 0.7 * np.log1p(np.maximum(b_lb, 0.0) * s) / s
    dq = np.diff(q_grid)
    if certified:
        slices = pll[1:] * dq
    else:
        slices = 0.5 * (pll[1:] + pll[:-1]) * dq
    out = np.zeros_like(q_grid)
    out[:-1] = slices[::-1].cumsum()[::-1]
    return out


def _tail_lookup(q_grid: np.ndarray, cumul: np.ndarray, x: np.ndarray, certified: bool) -> np.ndarray:
    if certified:
        idx = np.searchsorted(q_grid, x, side="left")
        idx = np.clip(idx, 0, len(q_grid) - 1)
        return cumul[idx]
    return np.interp(x, q_grid, cumul)


def _small_qm_column(
    q_m: float,
    dq_m: float,
    g: RegularGrid,
    alpha: float,
    certified: bool,
    env_q: np.ndarray,
    env_b: np.ndarray,
) -> dict:
    """Minimum assembled bound over the (q'', w) cells of one q_m column."""
    v_m = 1.0 / q_m
    qpp_nodes = np.linspace(0.0, 0.7 * q_m, g.n_qpp)
    dqpp = qpp_nodes[1] - qpp_nodes[0]

    if certified:
        qpp_lo = qpp_nodes[:-1]
        qpp_hi = qpp_nodes[1:]
    else:
        qpp_lo = qpp_hi = qpp_nodes

    # Feasible w window for a concave curve pinned at (q'', q'' v_m/0.7)
    # and (q_m, 1): at least the chord integral, at most the integral of
    # min(1, q v_m/0.7) (values cannot exceed v_m/0.7 past q'').
    r_pp = qpp_lo / (0.7 * q_m)
    k = 1.0 / 0.7 - 1.0
    cc = np.where(qpp_lo > 0.0, k * qpp_lo / (q_m - qpp_lo), 0.0)
    log_ratio = np.where(qpp_lo > 0.0, np.log(q_m / np.maximum(qpp_lo, 1e-300)), 0.0)
    w_lo_edge = cc * log_ratio + 1.0 - r_pp
    w_hi_edge = math.log(1.0 / 0.7) + 1.0 - r_pp
    fr = np.linspace(0.0, 1.0, g.n_w + 1)
    w_nodes = w_lo_edge[:, None] + fr[None, :] * (w_hi_edge - w_lo_edge)[:, None]
    if certified:
        w_lo = w_nodes[:, :-1]
        w_hi = w_nodes[:, 1:]
        qpp_lo2 = np.broadcast_to(qpp_lo[:, None], w_lo.shape)
        qpp_hi2 = np.broadcast_to(qpp_hi[:, None], w_lo.shape)
        q_m_lo, q_m_hi = q_m, min(q_m + dq_m, Q_SPLIT)
    else:
        w_lo = w_hi = w_nodes
        qpp_lo2 = qpp_hi2 = np.broadcast_to(qpp_lo[:, None], w_lo.shape)
        q_m_lo = q_m_hi = q_m

    # certified upper bound on v*: worst corner (q_m_lo, q''_hi, w_hi)
    v_bar, unbounded = _critical_value_arrays(
        q_m_lo, qpp_hi2, w_hi, g.n_qhat, g.n_scan
    )
    case_iii = bool(np.any(v_bar >= (1.0 / q_m_lo) / 0.7 - 1e-12)) or bool(np.any(unbounded))

    # payment for bids >= v_m/0.7: worst corner (q_m_hi, q''_lo, w_lo)
    p07 = qpp_lo2 / q_m_hi + 0.7 * w_lo - 0.7 * float(_log_over_one_minus(q_m_hi)) - 0.7
    pvm = _pvm(q_m_hi)

    # pentagon tail on the envelope grid, with payments at the cell's q_m
    cumul = _tail_cumulative(env_q, env_b, q_m_lo, certified)

    v_m_lo = 1.0 / q_m_lo

    # case i: v* <= v_m. Worst in-case v* is min(v_bar, v_m).
    v_i = np.minimum(v_bar, v_m_lo)
    q1 = 1.0 / (1.0 + v_i * (1.0 - q_m_lo))
    mass2 = np.maximum(q1 - q_m_hi, 0.0)
    tail_i = _tail_lookup(env_q, cumul, np.maximum(q1, q_m), certified)
    bound_i = p07 * q_m_hi + pvm * mass2 + tail_i

    # case ii: v_m <= v* <= v_m/0.7, empty when v_bar < v_m
    has_ii = v_bar >= v_m_lo - 1e-12
    v_ii = np.minimum(v_bar, v_m_lo / 0.7)
    k = 1.0 / 0.7 - 1.0
    tail_ii = _tail_lookup(env_q, cumul, np.array(q_m_hi), certified)
    bound_cell = bound_i.copy()
    if np.any(has_ii):
        q2_best = np.full(v_ii.shape, np.inf)
        qm_corners = (q_m_lo, q_m_hi) if certified else (q_m,)
        for qmc in qm_corners:
            for qppc in ((qpp_lo2, qpp_hi2) if certified else (qpp_lo2,)):
                den = v_ii * (qmc - qppc) - 1.0 + qppc / (0.7 * qmc)
                q2 = np.where(
                    den > 1e-15,
                    k * qppc / np.maximum(den, 1e-300),
                    qmc,
                )
                q2 = np.minimum(q2, qmc)
                q2_best = np.minimum(q2_best, q2)
        bound_ii = p07 * q2_best + tail_ii
        bound_cell = np.where(has_ii, np.minimum(bound_i, bound_ii), bound_i)

    i_min = int(np.argmin(bound_cell))
    idx = np.unravel_index(i_min, bound_cell.shape)
    return {
        "min": float(bound_cell[idx]),
        "argmin": {
            "q_m": q_m,
            "q_pp": float(qpp_lo2[idx]),
            "w": float(w_lo[idx]),
            "case": "ii" if (np.any(has_ii) and bool(has_ii[idx])) else "i",
            "v_bar": float(v_bar[idx]),
        },
        "case_iii": case_iii,
        "n_cells": int(bound_cell.size),
        "cells": (qpp_lo2, w_lo, bound_cell),
    }


def verify_regular_small(
    alpha: float = ALPHA_REGULAR,
    grid_scale: str = "default",
    certified: bool = False,
    target: float = REGULAR_TARGET,
    workers: int | None = None,
    collect_cells: bool = False,
) -> CertReport:
    """Small regime q_m <= 0.62: minimize the assembled bound over cells."""
    g = SCALES[grid_scale]
    if workers is None:
        workers = int(os.environ.get("SBLAB_THREADS", "1"))
    n_q = max(int(round(Q_SPLIT / g.q_m_step)), 2)
    q_nodes = np.linspace(g.q_m_step, Q_SPLIT, n_q)
    dq_m = q_nodes[1] - q_nodes[0]

    # pentagon bid envelope on a coarse q_m grid; a column computed at a
    # smaller q_m lower-bounds the bids for every larger q_m (the pentagon
    # family only grows), so each fine node uses the nearest column below.
    env_cols = np.linspace(q_nodes[0], Q_SPLIT, g.n_qm_env)
    env: list[tuple[np.ndarray, np.ndarray]] = []
    for qc in env_cols:
        q_grid = np.linspace(qc, 1.0, g.n_qgrid)
        env.append((q_grid, _pentagon_bids(q_grid, qc, g.pent, alpha)))

    def column(q_m: float) -> dict:
        j = int(np.searchsorted(env_cols, q_m + 1e-12) - 1)
        j = max(j, 0)
        env_q, env_b = env[j]
        return _small_qm_column(q_m, dq_m, g, alpha, certified, env_q, env_b)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(column, q_nodes))
    else:
        results = [column(q) for q in q_nodes]

    best = min(results, key=lambda r: r["min"])
    case_iii_empty = not any(r["case_iii"] for r in results)
    n_cells = sum(r["n_cells"] for r in results)
    passed = best["min"] >= target and case_iii_empty
    extra = {"case_iii_empty": case_iii_empty}
    if collect_cells:
        rows = []
        for q_m, r in zip(q_nodes, results):
            qpp, w, b = r["cells"]
            for i in range(b.shape[0]):
                for j in range(b.shape[1]):
                    rows.append((float(q_m), float(qpp[i, j]), float(w[i, j]), float(b[i, j])))
        extra["cells"] = rows
    return CertReport(
        alpha=alpha,
        target=target,
        min_bound=best["min"],
        argmin=best["argmin"],
        passed=passed,
        n_cells=n_cells,
        grid={"scale": grid_scale, "certified": certified},
        extra=extra,
    )


def verify_regular(
    alpha: float = ALPHA_REGULAR,
    grid_scale: str = "default",
    certified: bool = False,
    target: float = REGULAR_TARGET,
    workers: int | None = None,
) -> CertReport:
    """Combined certification over all normalized regular curves."""
    large = verify_regular_large(alpha, grid_scale, certified, target)
    small = verify_regular_small(alpha, grid_scale, certified, target, workers)
    min_bound = min(large.min_bound, small.min_bound)
    argmin = large.argmin if large.min_bound <= small.min_bound else small.argmin
    case_iii_empty = small.extra["case_iii_empty"]
    return CertReport(
        alpha=alpha,
        target=target,
        min_bound=min_bound,
        argmin=argmin,
        passed=min_bound >= target and case_iii_empty,
        n_cells=large.n_cells + small.n_cells,
        grid={"scale": grid_scale, "certified": certified},
        extra={
            "branch_minima": {
                "large_branch_a": large.extra["branch_minima"]["branch_a"],
                "large_branch_b": large.extra["branch_minima"]["branch_b"],
                "small": small.min_bound,
            },
            "case_iii_empty": case_iii_empty,
            "margin": min_bound - target,
        },
    )


# ---------------------------------------------------------------------------
# Bid-preference transfer check (engine property, not used in certification)
# ---------------------------------------------------------------------------


def revenue_monotone_check(
    r1: RevenueCurve,
    r2: RevenueCurve,
    q_dagger: float,
    v: float,
    alpha: float = ALPHA_REGULAR,
    n_b: int = 40,
    tol: float = 1e-9,
) -> bool:
    """If r1 <= r2 below q_dagger with equality there, a preference for the
    bid at q_dagger over any higher bid transfers from r1 to r2."""
    for q in np.linspace(1e-6, q_dagger, 64):
        if r1.revenue(float(q)) > r2.revenue(float(q)) + 1e-7:
            raise ValueError("revenue_monotone_check: r1 > r2 below q_dagger")
    if abs(r1.revenue(q_dagger) - r2.revenue(q_dagger)) > 1e-7:
        raise ValueError("revenue_monotone_check: r1(q_dagger) != r2(q_dagger)")
    b_dag = r1.revenue(q_dagger) / q_dagger
    tops = [c.top_value() for c in (r1, r2)]
    b_hi = min(t for t in tops if math.isfinite(t)) if any(map(math.isfinite, tops)) else 10 * b_dag
    b_hi = max(b_hi, 2.0 * b_dag)
    for b2 in np.geomspace(b_dag, b_hi, n_b):
        b2 = float(b2)
        if mech_utility(v, b_dag, r1, alpha) >= mech_utility(v, b2, r1, alpha) - 1e-12:
            if mech_utility(v, b_dag, r2, alpha) < mech_utility(v, b2, r2, alpha) - tol:
                return False
    return True
