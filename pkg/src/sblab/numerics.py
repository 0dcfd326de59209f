"""Shared numerical kernels.

Bracketed root finding (bisection with secant acceleration), adaptive
Simpson quadrature on finite intervals, and deterministic grid iteration
with an exact min-reduce. Everything here is pure: identical inputs give
bit-identical outputs.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

DEFAULT_ROOT_TOL = 1e-12
DEFAULT_INTEGRATE_TOL = 1e-9
EPS_EDGE = 1e-12
_MAX_SIMPSON_DEPTH = 40


class NoBracketError(ValueError):
    """The supplied interval does not bracket a sign change."""


class NonFiniteIntegrandError(ValueError):
    """The integrand produced NaN or +/-inf at an interior point."""


@dataclass(frozen=True)
class Bracket:
    """An interval [lo, hi] whose endpoint values have opposite signs."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"Bracket: lo must be < hi, got [{self.lo}, {self.hi}]")
        if self.f_lo * self.f_hi > 0.0:
            raise NoBracketError(
                f"no-bracket: f({self.lo})={self.f_lo} and f({self.hi})={self.f_hi} "
                "have the same sign"
            )

    @staticmethod
    def from_function(f: Callable[[float], float], lo: float, hi: float) -> "Bracket":
        return Bracket(lo, hi, f(lo), f(hi))


@dataclass(frozen=True)
class Grid1D:
    """steps+1 equally spaced nodes on [lo, hi], both endpoints included."""

    lo: float
    hi: float
    steps: int

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"Grid1D: lo must be < hi, got [{self.lo}, {self.hi}]")
        if self.steps < 1:
            raise ValueError(f"Grid1D: steps must be >= 1, got {self.steps}")

    def nodes(self) -> list[float]:
        h = (self.hi - self.lo) / self.steps
        out = [self.lo + i * h for i in range(self.steps + 1)]
        out[-1] = self.hi  # exact endpoint despite rounding
        return out


def find_root(
    f: Callable[[float], float],
    bracket: Bracket,
    tol: float = DEFAULT_ROOT_TOL,
) -> float:
    """Root of f inside the bracket.

    Hybrid scheme: a secant step is taken whenever it lands strictly inside
    the current bracket, otherwise the step falls back to bisection, so
    convergence is guaranteed for any sign-changing f. Terminates when
    |f(x)| <= tol or the bracket width is <= tol.
    """
    if tol <= 0.0:
        raise ValueError("find_root: tol must be positive")
    lo, hi, f_lo, f_hi = bracket.lo, bracket.hi, bracket.f_lo, bracket.f_hi
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    for _ in range(4096):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if f_hi != f_lo:
            sec = hi - f_hi * (hi - lo) / (f_hi - f_lo)
            if lo < sec < hi:
                mid = sec
        # Guard against secant stagnation at an endpoint.
        if mid <= lo or mid >= hi:
            mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if abs(f_mid) <= tol or f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
    return h * (fa + 4.0 * fm + fb) / 6.0


def _adaptive(
    f: Callable[[float], float],
    a: float,
    b: float,
    fa: float,
    fm: float,
    fb: float,
    whole: float,
    tol: float,
    depth: int,
) -> float:
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    if not (math.isfinite(flm) and math.isfinite(frm)):
        raise NonFiniteIntegrandError(f"non-finite-integrand: f({lm})={flm}, f({rm})={frm}")
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    if depth >= _MAX_SIMPSON_DEPTH or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    half = 0.5 * tol
    return _adaptive(f, a, m, fa, flm, fm, left, half, depth + 1) + _adaptive(
        f, m, b, fm, frm, fb, right, half, depth + 1
    )


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_INTEGRATE_TOL,
    eps_edge: float = EPS_EDGE,
) -> float:
    """Adaptive-Simpson integral of f over [a, b].

    The two endpoint evaluations are inset by eps_edge*(b-a), which makes
    integrands with integrable endpoint singularities (R(q)/q near q=0)
    usable without special-casing; the induced error is O(eps_edge) and
    far below any tolerance used in this package. A NaN/inf at an interior
    node raises NonFiniteIntegrandError.
    """
    if a > b:
        raise ValueError(f"integrate: need a <= b, got [{a}, {b}]")
    if a == b:
        return 0.0
    w = b - a
    a_in = a + eps_edge * w
    b_in = b - eps_edge * w
    fa = f(a_in)
    fb = f(b_in)
    fm = f(0.5 * (a + b))
    if not (math.isfinite(fa) and math.isfinite(fb) and math.isfinite(fm)):
        raise NonFiniteIntegrandError("non-finite-integrand at initial nodes")
    whole = _simpson(fa, fm, fb, w)
    return _adaptive(f, a_in, b_in, fa, fm, fb, whole, tol, 0)


def grid_min(
    g: Callable[..., float],
    grids: Sequence[Grid1D],
    workers: int = 1,
) -> tuple[float, tuple[float, ...]]:
    """Exact minimum of g over the cartesian product of grid nodes.

    Returns (min value, argmin node tuple). Ties are broken toward the
    lowest row-major index, so the reduction is independent of evaluation
    order; the optional thread pool only parallelises evaluation.
    """
    if not grids:
        raise ValueError("grid_min: empty grid")
    axes = [grid.nodes() for grid in grids]
    cells: list[tuple[float, ...]] = list(itertools.product(*axes))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda c: g(*c), cells))
    else:
        values = [g(*cell) for cell in cells]

    best_i = 0
    best_v = values[0]
    for i in range(1, len(values)):
        if values[i] < best_v:
            best_v = values[i]
            best_i = i
    return best_v, cells[best_i]


def bisect_predicate(
    pred: Callable[[float], bool],
    lo: float,
    hi: float,
    tol: float = 1e-12,
) -> float:
    """Boundary sup{x in [lo, hi] : pred(x)} for a monotone predicate.

    pred must be True at lo and eventually False (True on a prefix). If
    pred(hi) holds, hi is returned.
    """
    if pred(hi):
        return hi
    if not pred(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def monotone_nondecreasing(values: Iterable[float], tol: float = 0.0) -> bool:
    prev = None
    for v in values:
        if prev is not None and v < prev - tol:
            return False
        prev = v
    return True
