"""Valuation distributions as revenue curves in quantile space.

Every distribution is represented by its revenue curve R(q) = q * v(q),
q in [0, 1], assembled from closed-form pieces. All downstream integrals
are taken over quantiles, so unbounded value supports never appear as
integration domains. Atoms at the top of the support show up as linear
segments of R through the origin (constant v), which is the only kind of
atom the supported families need.

Supported families:
  trunc_exp(T)                exponential survival on [0, T), atom at T
  shifted_pareto(c, a)        survival c/(v-a) on [a+c, inf)
  uniform(l, h)
  r0_line(r0, q_m)            R = r0 + (1-r0) q/q_m, then flat 1
  pentagon(q_m, q_k, r_k)     flat 1, two descending segments
  triangle(q_m)               R = q/q_m then (1-q)/(1-q_m)
  piecewise_linear_concave    explicit concave (q, R) point list
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

from sblab.numerics import Bracket, find_root

INF = math.inf


# ---------------------------------------------------------------------------
# Distribution specs (JSON-facing configs)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncExp:
    T: float

    def validate(self) -> None:
        if not self.T > 0.0:
            raise ValueError("trunc_exp: T must be > 0")


@dataclass(frozen=True)
class ShiftedPareto:
    c: float
    a: float

    def validate(self) -> None:
        if not self.c > 0.0:
            raise ValueError("shifted_pareto: c must be > 0")
        if self.a < 0.0:
            raise ValueError("shifted_pareto: a must be >= 0")


@dataclass(frozen=True)
class Uniform:
    l: float
    h: float

    def validate(self) -> None:
        if not (0.0 <= self.l < self.h):
            raise ValueError("uniform: need 0 <= l < h")


@dataclass(frozen=True)
class R0Line:
    r0: float
    q_m: float

    def validate(self) -> None:
        if not (0.0 <= self.r0 <= 1.0):
            raise ValueError("r0_line: r0 must be in [0, 1]")
        if not (0.0 < self.q_m <= 1.0):
            raise ValueError("r0_line: q_m must be in (0, 1]")


@dataclass(frozen=True)
class Pentagon:
    q_m: float
    q_k: float
    r_k: float

    def validate(self) -> None:
        if not (0.0 < self.q_m <= self.q_k <= 1.0):
            raise ValueError("pentagon: need 0 < q_m <= q_k <= 1")
        if self.q_k < 1.0:
            r_min = (1.0 - self.q_k) / (1.0 - self.q_m) if self.q_m < 1.0 else 0.0
        else:
            r_min = 0.0
        if not (r_min - 1e-12 <= self.r_k <= 1.0 + 1e-12):
            raise ValueError(
                f"pentagon: r_k must be in [{r_min}, 1] for concavity, got {self.r_k}"
            )
        if self.q_k == self.q_m and abs(self.r_k - 1.0) > 1e-12:
            raise ValueError("pentagon: q_k == q_m requires r_k == 1 for continuity")


@dataclass(frozen=True)
class Triangle:
    q_m: float

    def validate(self) -> None:
        if not (0.0 < self.q_m < 1.0):
            raise ValueError("triangle: q_m must be in (0, 1)")


@dataclass(frozen=True)
class PiecewiseLinearConcave:
    points: tuple[tuple[float, float], ...]

    def validate(self) -> None:
        pts = self.points
        if len(pts) < 2:
            raise ValueError("piecewise_linear_concave: need at least 2 points")
        qs = [p[0] for p in pts]
        if qs[0] != 0.0 or qs[-1] != 1.0:
            raise ValueError("piecewise_linear_concave: quantiles must span [0, 1]")
        if any(b <= a for a, b in zip(qs, qs[1:])):
            raise ValueError("piecewise_linear_concave: quantiles must be strictly increasing")
        if any(p[1] < 0.0 for p in pts):
            raise ValueError("piecewise_linear_concave: revenue must be non-negative")
        slopes = [
            (pts[i + 1][1] - pts[i][1]) / (pts[i + 1][0] - pts[i][0])
            for i in range(len(pts) - 1)
        ]
        if any(s2 > s1 + 1e-12 for s1, s2 in zip(slopes, slopes[1:])):
            raise ValueError("piecewise_linear_concave: resulting R is not concave")


DistributionSpec = Union[
    TruncExp, ShiftedPareto, Uniform, R0Line, Pentagon, Triangle, PiecewiseLinearConcave
]

_FAMILY_NAMES = {
    TruncExp: "trunc_exp",
    ShiftedPareto: "shifted_pareto",
    Uniform: "uniform",
    R0Line: "r0_line",
    Pentagon: "pentagon",
    Triangle: "triangle",
    PiecewiseLinearConcave: "piecewise_linear_concave",
}

_FAMILY_FIELDS = {
    "trunc_exp": (TruncExp, ("T",)),
    "shifted_pareto": (ShiftedPareto, ("c", "a")),
    "uniform": (Uniform, ("l", "h")),
    "r0_line": (R0Line, ("r0", "q_m")),
    "pentagon": (Pentagon, ("q_m", "q_k", "r_k")),
    "triangle": (Triangle, ("q_m",)),
    "piecewise_linear_concave": (PiecewiseLinearConcave, ("points",)),
}


def spec_to_json(spec: DistributionSpec) -> str:
    name = _FAMILY_NAMES[type(spec)]
    d: dict = {"family": name}
    _, fields = _FAMILY_FIELDS[name]
    for f in fields:
        val = getattr(spec, f)
        d[f] = [list(p) for p in val] if f == "points" else val
    return json.dumps(d)


def spec_from_json(text: str) -> DistributionSpec:
    """Parse a one-object JSON spec; unknown families or fields are rejected."""
    d = json.loads(text)
    if not isinstance(d, dict) or "family" not in d:
        raise ValueError("spec: expected a JSON object with a 'family' field")
    family = d.pop("family")
    if family not in _FAMILY_FIELDS:
        raise ValueError(f"spec: unknown family {family!r}")
    cls, fields = _FAMILY_FIELDS[family]
    unknown = set(d) - set(fields)
    if unknown:
        raise ValueError(f"spec: unknown fields {sorted(unknown)} for family {family!r}")
    missing = set(fields) - set(d)
    if missing:
        raise ValueError(f"spec: missing fields {sorted(missing)} for family {family!r}")
    if family == "piecewise_linear_concave":
        d["points"] = tuple(tuple(float(x) for x in p) for p in d["points"])
    else:
        d = {k: float(v) for k, v in d.items()}
    spec = cls(**d)
    spec.validate()
    return spec


# ---------------------------------------------------------------------------
# Closed-form curve pieces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearPiece:
    """R(q) = c + m*q on [q_lo, q_hi]; c >= 0 for any valid distribution.

    c == 0 is an atom: v(q) = m on the whole piece.
    """

    q_lo: float
    q_hi: float
    c: float
    m: float

    def revenue(self, q: float) -> float:
        return self.c + self.m * q

    def value(self, q: float) -> float:
        return self.c / q + self.m

    def marginal(self, q: float) -> float:
        return self.m

    def pay_integral(self, a: float, b: float) -> float:
        # int_a^b R(t)/t dt = c ln(b/a) + m (b - a)
        if self.c == 0.0:
            return self.m * (b - a)
        if a <= 0.0:
            return INF
        return self.c * math.log(b / a) + self.m * (b - a)

    def value_integral(self, a: float, b: float) -> float:
        return self.pay_integral(a, b)  # v(t) = R(t)/t

    def foc_root(self, k_target: float) -> float | None:
        # k(q) = v(q) - R'(q) = c/q, decreasing (or identically 0)
        if self.c <= 0.0 or k_target <= 0.0:
            return None
        q = self.c / k_target
        if self.q_lo < q < self.q_hi:
            return q
        return None


@dataclass(frozen=True)
class ExpPiece:
    """R(q) = -rho * q * ln(q): exponential survival scaled by rho."""

    q_lo: float
    q_hi: float
    rho: float

    def revenue(self, q: float) -> float:
        return -self.rho * q * math.log(q)

    def value(self, q: float) -> float:
        return -self.rho * math.log(q)

    def marginal(self, q: float) -> float:
        return -self.rho * (math.log(q) + 1.0)

    def pay_integral(self, a: float, b: float) -> float:
        # int -rho ln t dt = -rho (t ln t - t)
        def anti(t: float) -> float:
            return -self.rho * (t * math.log(t) - t) if t > 0.0 else 0.0

        return anti(b) - anti(a)

    def value_integral(self, a: float, b: float) -> float:
        return self.pay_integral(a, b)

    def foc_root(self, k_target: float) -> float | None:
        # k(q) = rho exactly; the constant case is covered by endpoints.
        return None


@dataclass(frozen=True)
class QuadPiece:
    """R(q) = q*(hi_val - (hi_val - lo_val) q): uniform[lo_val, hi_val]."""

    q_lo: float
    q_hi: float
    lo_val: float
    hi_val: float

    @property
    def _delta(self) -> float:
        return self.hi_val - self.lo_val

    def revenue(self, q: float) -> float:
        return q * (self.hi_val - self._delta * q)

    def value(self, q: float) -> float:
        return self.hi_val - self._delta * q

    def marginal(self, q: float) -> float:
        return self.hi_val - 2.0 * self._delta * q

    def pay_integral(self, a: float, b: float) -> float:
        return self.hi_val * (b - a) - 0.5 * self._delta * (b * b - a * a)

    def value_integral(self, a: float, b: float) -> float:
        return self.pay_integral(a, b)

    def foc_root(self, k_target: float) -> float | None:
        # k(q) = Delta * q, increasing
        if self._delta <= 0.0:
            return None
        q = k_target / self._delta
        if self.q_lo < q < self.q_hi:
            return q
        return None


Piece = Union[LinearPiece, ExpPiece, QuadPiece]


# ---------------------------------------------------------------------------
# Revenue curve
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RevenueCurve:
    """Immutable quantile-space revenue curve.

    pieces cover (0, 1] contiguously; q_m and v_m are the monopoly point,
    ev is E[v] = int_0^1 v(q) dq (may be inf), support_top_quantile is the
    smallest q with R(q) > 0 (zero for every supported family).
    """

    pieces: tuple[Piece, ...]
    q_m: float
    v_m: float
    ev: float
    support_top_quantile: float = 0.0

    # -- pointwise accessors ------------------------------------------------

    def _piece_at(self, q: float) -> Piece:
        for p in self.pieces:
            if q <= p.q_hi:
                return p
        return self.pieces[-1]

    def revenue(self, q: float) -> float:
        if q <= 0.0:
            p = self.pieces[0]
            return p.revenue(0.0) if isinstance(p, LinearPiece) else 0.0
        return self._piece_at(q).revenue(q)

    def value(self, q: float) -> float:
        if q <= 0.0:
            return self.top_value()
        if q > 1.0:
            q = 1.0
        return self._piece_at(q).value(q)

    def marginal(self, q: float) -> float:
        """R'(q); at a kink this is the right derivative."""
        return self._piece_at(q).marginal(q)

    def marginal_bounds(self, q: float) -> tuple[float, float]:
        """Subgradient interval (R'_plus, R'_minus) at q; equal off kinks."""
        lo = self.marginal(q)
        hi = lo
        for p in self.pieces:
            if abs(p.q_hi - q) < 1e-15 and p is not self.pieces[-1]:
                hi = p.marginal(q)
            if abs(p.q_lo - q) < 1e-15:
                lo = p.marginal(q)
        return (min(lo, hi), max(lo, hi))

    def top_value(self) -> float:
        """Highest value in the support; inf when R(0) > 0."""
        return _top_of(self.pieces[0])

    def bottom_value(self) -> float:
        return self.pieces[-1].value(1.0)

    def quantile(self, v: float) -> float:
        """q(v) = P[s > v]: the smallest q with value(q) <= v.

        For an atom at value m (constant-v piece), quantile(m) is the low
        end of the piece, so a bid equal to the atom wins against it.
        """
        if v <= 0.0:
            return 1.0
        if v >= self.top_value():
            return 0.0
        if v <= self.bottom_value():
            return 1.0
        for p in self.pieces:
            v_hi = p.value(p.q_hi)
            if v < v_hi - 1e-15:
                continue
            if isinstance(p, LinearPiece):
                if p.c == 0.0:
                    return p.q_lo  # atom at value p.m
                q = p.c / (v - p.m) if v > p.m else p.q_hi
            elif isinstance(p, ExpPiece):
                q = math.exp(-v / p.rho)
            else:
                q = (p.hi_val - v) / p._delta if p._delta > 0.0 else p.q_lo
            return min(max(q, p.q_lo), p.q_hi)
        return 1.0

    # -- integrals ----------------------------------------------------------

    def pay_integral(self, a: float, b: float) -> float:
        """int_a^b R(t)/t dt, exact per piece. Returns inf when divergent."""
        if b <= a:
            return 0.0
        total = 0.0
        for p in self.pieces:
            lo = max(a, p.q_lo)
            hi = min(b, p.q_hi)
            if hi > lo:
                part = p.pay_integral(lo, hi)
                if not math.isfinite(part):
                    return INF
                total += part
        return total

    def kink_quantiles(self) -> tuple[float, ...]:
        return tuple(p.q_hi for p in self.pieces[:-1])


def _top_of(p: Piece) -> float:
    if isinstance(p, LinearPiece):
        return INF if p.c > 0.0 else p.m
    if isinstance(p, ExpPiece):
        return INF
    return p.hi_val


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _expected_value_of(pieces: Sequence[Piece]) -> float:
    first = pieces[0]
    if isinstance(first, LinearPiece) and first.c > 0.0 and first.q_lo == 0.0:
        return INF
    total = 0.0
    for p in pieces:
        total += p.value_integral(max(p.q_lo, 0.0), p.q_hi)
    return total


def curve_from_pieces(pieces: Sequence[Piece], q_m: float) -> RevenueCurve:
    """Assemble a curve from raw pieces (tests use this for counterexamples)."""
    pieces = tuple(pieces)
    v_m = pieces[0].revenue(q_m) / q_m if q_m > 0 else INF
    for p in pieces:
        if p.q_lo <= q_m <= p.q_hi:
            v_m = p.revenue(q_m) / q_m
            break
    return RevenueCurve(pieces=pieces, q_m=q_m, v_m=v_m, ev=_expected_value_of(pieces))


def curve_from_points(points: Sequence[tuple[float, float]], q_m: float | None = None) -> RevenueCurve:
    """Piecewise-linear curve through (q, R) points.

    Requires v(q) = R/q non-increasing (a valid distribution) but not
    concavity, so non-regular counterexamples can be built directly.
    """
    pts = [(float(q), float(r)) for q, r in points]
    pieces: list[Piece] = []
    for (q0, r0), (q1, r1) in zip(pts, pts[1:]):
        m = (r1 - r0) / (q1 - q0)
        c = r0 - m * q0
        if c < -1e-12:
            raise ValueError(
                "piecewise curve: v(q) increasing on a segment (negative intercept); "
                "not a valid distribution"
            )
        pieces.append(LinearPiece(q_lo=q0, q_hi=q1, c=max(c, 0.0), m=m))
    if q_m is None:
        best = max(r for _, r in pts)
        q_m = min(q for q, r in pts if r >= best - 1e-15)
        if q_m == 0.0:  # flat maximal segment from 0: use its right end
            for (q0, r0), (q1, r1) in zip(pts, pts[1:]):
                if r1 >= best - 1e-15:
                    q_m = q1
                else:
                    break
    return curve_from_pieces(pieces, q_m)


def build(spec: DistributionSpec) -> RevenueCurve:
    """Revenue curve of a parametric spec; monopoly point is analytic."""
    spec.validate()

    if isinstance(spec, TruncExp):
        t = spec.T
        q_atom = math.exp(-t)
        pieces: list[Piece] = [LinearPiece(0.0, q_atom, 0.0, t)]
        if q_atom < 1.0:
            pieces.append(ExpPiece(q_atom, 1.0, 1.0))
        q_m = 1.0 / math.e if t >= 1.0 else q_atom
        v_m = 1.0 if t >= 1.0 else t
        return RevenueCurve(tuple(pieces), q_m, v_m, ev=1.0 - math.exp(-t))

    if isinstance(spec, ShiftedPareto):
        piece = LinearPiece(0.0, 1.0, spec.c, spec.a)
        return RevenueCurve((piece,), q_m=1.0, v_m=spec.a + spec.c, ev=INF)

    if isinstance(spec, Uniform):
        piece = QuadPiece(0.0, 1.0, spec.l, spec.h)
        l, h = spec.l, spec.h
        if h >= 2.0 * l:
            q_m = h / (2.0 * (h - l))
            v_m = h / 2.0
        else:
            q_m, v_m = 1.0, l
        return RevenueCurve((piece,), q_m, v_m, ev=0.5 * (l + h))

    if isinstance(spec, R0Line):
        q_m = spec.q_m
        pieces = []
        if spec.r0 < 1.0 or q_m < 1.0:
            pieces.append(LinearPiece(0.0, q_m, spec.r0, (1.0 - spec.r0) / q_m))
        else:
            pieces.append(LinearPiece(0.0, q_m, 1.0, 0.0))
        if q_m < 1.0:
            pieces.append(LinearPiece(q_m, 1.0, 1.0, 0.0))
        return RevenueCurve(tuple(pieces), q_m, 1.0 / q_m, ev=_expected_value_of(pieces))

    if isinstance(spec, Pentagon):
        q0, qk, rk = spec.q_m, spec.q_k, spec.r_k
        pieces = [LinearPiece(0.0, q0, 1.0, 0.0)]
        if qk > q0:
            m_mid = (rk - 1.0) / (qk - q0)
            pieces.append(LinearPiece(q0, qk, 1.0 - m_mid * q0, m_mid))
        if qk < 1.0:
            m_last = -rk / (1.0 - qk)
            pieces.append(LinearPiece(qk, 1.0, rk - m_last * qk, m_last))
        return RevenueCurve(tuple(pieces), q0, 1.0 / q0, ev=INF)

    if isinstance(spec, Triangle):
        q_m = spec.q_m
        pieces = [
            LinearPiece(0.0, q_m, 0.0, 1.0 / q_m),
            LinearPiece(q_m, 1.0, 1.0 / (1.0 - q_m), -1.0 / (1.0 - q_m)),
        ]
        return RevenueCurve(tuple(pieces), q_m, 1.0 / q_m, ev=_expected_value_of(pieces))

    if isinstance(spec, PiecewiseLinearConcave):
        return curve_from_points(spec.points)

    raise TypeError(f"unknown spec type {type(spec)!r}")


def expected_value(curve: RevenueCurve) -> float:
    """E[v] = int_0^1 v(q) dq; inf when the integral diverges."""
    return curve.ev


def scale(curve: RevenueCurve, rho: float) -> RevenueCurve:
    """Curve of the distribution scaled by rho: v'(q) = rho * v(q)."""
    if not rho > 0.0:
        raise ValueError("scale: rho must be > 0")
    scaled: list[Piece] = []
    for p in curve.pieces:
        if isinstance(p, LinearPiece):
            scaled.append(LinearPiece(p.q_lo, p.q_hi, rho * p.c, rho * p.m))
        elif isinstance(p, ExpPiece):
            scaled.append(ExpPiece(p.q_lo, p.q_hi, rho * p.rho))
        else:
            scaled.append(QuadPiece(p.q_lo, p.q_hi, rho * p.lo_val, rho * p.hi_val))
    ev = curve.ev * rho if math.isfinite(curve.ev) else INF
    return RevenueCurve(tuple(scaled), curve.q_m, rho * curve.v_m, ev, curve.support_top_quantile)


def normalized(curve: RevenueCurve) -> RevenueCurve:
    """Scale so the optimal (monopoly) revenue is exactly 1."""
    r_m = curve.q_m * curve.v_m
    return scale(curve, 1.0 / r_m)


# ---------------------------------------------------------------------------
# Class validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassReport:
    ok: bool
    violations: tuple[float, ...]  # grid points where the class test failed


def validate(curve: RevenueCurve, klass: str, grid_points: int = 400, tol: float = 1e-9) -> ClassReport:
    """Check membership in a distribution class on a dense grid.

    regular: R concave (midpoint concavity over a quantile grid).
    mhr:     ln of the survival function concave in value, i.e. hazard
             non-decreasing, checked by second differences on a value grid
             spanning the interior of the support.
    """
    if klass == "regular":
        violations = []
        qs = [i / grid_points for i in range(1, grid_points)]
        for i in range(1, len(qs) - 1):
            mid = curve.revenue(qs[i])
            chord = 0.5 * (curve.revenue(qs[i - 1]) + curve.revenue(qs[i + 1]))
            if mid < chord - tol:
                violations.append(qs[i])
        return ClassReport(ok=not violations, violations=tuple(violations))

    if klass == "mhr":
        lo = curve.bottom_value()
        top = curve.top_value()
        hi = min(top, curve.value(1e-6)) if math.isinf(top) else top
        # stay strictly inside the support so quantile() is smooth
        lo_in = lo + 1e-6 * max(1.0, hi - lo)
        hi_in = hi - 1e-6 * max(1.0, hi - lo)
        if hi_in <= lo_in:
            return ClassReport(ok=True, violations=())
        h = (hi_in - lo_in) / grid_points
        vs = [lo_in + i * h for i in range(grid_points + 1)]
        logq = [math.log(max(curve.quantile(v), 1e-300)) for v in vs]
        violations = []
        for i in range(1, grid_points):
            # concavity of ln q(v): second difference <= 0
            d2 = logq[i - 1] - 2.0 * logq[i] + logq[i + 1]
            if d2 > tol * max(1.0, abs(logq[i])) + 1e-7:
                violations.append(vs[i])
        return ClassReport(ok=not violations, violations=tuple(violations))

    raise ValueError(f"validate: unknown class {klass!r} (expected 'regular' or 'mhr')")


# ---------------------------------------------------------------------------
# Scalar diagnostics used by the regular-distribution certification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurveDiagnostics:
    q_m: float
    q_pp: float  # quantile of v_m / alpha
    w: float     # int_{q_pp}^{q_m} R(q)/q dq


def diagnostics(curve: RevenueCurve, alpha: float = 0.7) -> CurveDiagnostics:
    q_pp = curve.quantile(curve.v_m / alpha)
    w = curve.pay_integral(q_pp, curve.q_m)
    return CurveDiagnostics(q_m=curve.q_m, q_pp=q_pp, w=w)


def quantile_by_root(curve: RevenueCurve, v: float, tol: float = 1e-12) -> float:
    """Invert v(q) numerically; used as an independent cross-check in tests."""
    f = lambda q: curve.value(q) - v
    lo, hi = 1e-12, 1.0
    f_lo, f_hi = f(lo), f(hi)
    if f_lo < 0.0:
        return 0.0
    if f_hi > 0.0:
        return 1.0
    return find_root(f, Bracket(lo, hi, f_lo, f_hi), tol)
