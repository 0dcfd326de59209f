"""General prior-independent lower bound via point-mass imitation.

Against a uniform prior on [l, h] (with 2l >= h so the optimal posted
price is l), any mechanism with approximation ratio beta must give the
highest type allocation at least 1/beta and utility at least
(h - sqrt(h^2 - 4 l (h-l)/beta))/2, while a point-mass type at any
sample value s can imitate the highest type and so collect at most
s (1 - 1/beta). Averaging the imitation constraint over the sample and
combining the three claims yields a feasibility gap that is positive
exactly when beta is unattainable; the sign change locates the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from sblab.numerics import Bracket, find_root


@dataclass(frozen=True)
class LbInstance:
    l: float
    h: float

    def __post_init__(self) -> None:
        if not 0.0 < self.l < self.h:
            raise ValueError("LbInstance: need 0 < l < h")
        if self.h > 2.0 * self.l:
            raise ValueError("LbInstance: need h <= 2l so the low price is optimal")

    @property
    def paper_backed(self) -> bool:
        return self.l == 1.0 and self.h == 2.0


def feasibility_gap(beta: float, inst: LbInstance = LbInstance(1.0, 2.0)) -> float:
    """LHS - RHS of the combined imitation inequality; > 0 means no
    mechanism achieves ratio beta on this instance."""
    if beta < 1.0:
        raise ValueError("feasibility_gap: beta must be >= 1")
    l, h = inst.l, inst.h
    # E[s * x(h, s)] worst case: allocation mass 1/beta on the lowest samples
    alloc_term = (0.5 * ((l + (h - l) / beta) ** 2 - l * l)) / (h - l)
    disc = h * h - 4.0 * l * (h - l) / beta
    u_high = 0.5 * (h - math.sqrt(max(disc, 0.0)))
    lhs = alloc_term - h + u_high
    rhs = (1.0 - 1.0 / beta) * 0.5 * (l + h)
    return lhs - rhs


def solve_beta(inst: LbInstance = LbInstance(1.0, 2.0), tol: float = 1e-12) -> float:
    """Root of the feasibility gap on [1, 2]: a lower bound on the
    prior-independent approximation ratio of every mechanism."""
    f = lambda b: feasibility_gap(b, inst)
    g1, g2 = f(1.0), f(2.0)
    if g1 * g2 > 0.0:
        raise ValueError("solve_beta: inequality never binds on [1, 2]")
    return find_root(f, Bracket(1.0, 2.0, g1, g2), tol)
