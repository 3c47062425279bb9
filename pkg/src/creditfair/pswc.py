"""Proportional sharing with constraints (weighted water-filling).

Given capacity ``A``, positive weights ``w``, minima ``m`` and limits ``l``
(``None`` meaning unbounded), find a level ``x`` such that

    a_i = clamp(x * w_i, m_i, l_i)  and  sum(a) == A.

``phi(x) = sum_i clamp(x * w_i, m_i, l_i)`` is continuous, piecewise linear and
nondecreasing, with kinks at ``m_i / w_i`` and ``l_i / w_i``. :func:`solve`
sweeps the sorted kinks and solves the active linear piece exactly. The sweep
runs on integers after scaling every input by a common denominator; only the
level and the allocation are built as fractions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import to_num


class Infeasible(ValueError):
    pass


class InfeasibleLow(Infeasible):
    """Capacity is below the sum of minima."""


class InfeasibleHigh(Infeasible):
    """Capacity exceeds the sum of (all finite) limits."""


@dataclass(frozen=True)
class PswcProblem:
    capacity: Fraction
    weights: tuple[Fraction, ...]
    minima: tuple[Fraction, ...]
    limits: tuple[Optional[Fraction], ...]

    def __post_init__(self):
        object.__setattr__(self, "capacity", to_num(self.capacity))
        object.__setattr__(self, "weights", tuple(to_num(w) for w in self.weights))
        object.__setattr__(self, "minima", tuple(to_num(m) for m in self.minima))
        object.__setattr__(self, "limits",
                           tuple(None if l is None else to_num(l) for l in self.limits))
        n = len(self.weights)
        if n == 0:
            raise ValueError("PSWC needs at least one agent")
        if len(self.minima) != n or len(self.limits) != n:
            raise ValueError("weights, minima and limits must have equal length")
        # signs straight from numerators; Fraction comparisons are slow
        if self.capacity.numerator < 0:
            raise ValueError("capacity must be nonnegative")
        if any(w.numerator <= 0 for w in self.weights):
            raise ValueError("weights must be strictly positive")
        if any(m.numerator < 0 for m in self.minima):
            raise ValueError("minima must be nonnegative")
        for m, l in zip(self.minima, self.limits):
            if l is not None and l < m:
                raise ValueError("each minimum must not exceed its limit")

    @property
    def n(self) -> int:
        return len(self.weights)

    def clamp(self, x: Fraction, i: int) -> Fraction:
        v = x * self.weights[i]
        if v < self.minima[i]:
            return self.minima[i]
        lim = self.limits[i]
        if lim is not None and v > lim:
            return lim
        return v

    def phi(self, x: Fraction) -> Fraction:
        return sum((self.clamp(x, i) for i in range(self.n)), Fraction(0))

    def check_feasible(self) -> None:
        low = sum(self.minima, Fraction(0))
        if self.capacity < low:
            raise InfeasibleLow(f"capacity {self.capacity} < sum of minima {low}")
        if all(l is not None for l in self.limits):
            high = sum(self.limits, Fraction(0))
            if self.capacity > high:
                raise InfeasibleHigh(f"capacity {self.capacity} > sum of limits {high}")


@dataclass(frozen=True)
class PswcSolution:
    allocation: tuple[Fraction, ...]
    level: Fraction  # smallest x with phi(x) == capacity


def solve(problem: PswcProblem) -> PswcSolution:
    """Exact O(n log n) solve; reports the smallest valid water level."""
    A = problem.capacity
    vals = (A,) + problem.weights + problem.minima + tuple(l for l in problem.limits if l is not None)
    D = math.lcm(*(v.denominator for v in vals))
    scale = lambda v: v.numerator * (D // v.denominator)  # noqa: E731
    W = [scale(w) for w in problem.weights]
    M = [scale(m) for m in problem.minima]
    L = [None if l is None else scale(l) for l in problem.limits]
    target = scale(A)
    low = sum(M)
    if target < low or (None not in L and target > sum(L)):
        problem.check_feasible()  # raises with the exact amounts
    if target == low:
        return PswcSolution(problem.minima, Fraction(0))
    # kink positions k / LW with integer k; phi(x) = const + slope * x between kinks
    LW = math.lcm(*W)
    events = []
    for w, m, l in zip(W, M, L):
        events.append((m * (LW // w), -m, w))  # starts rising
        if l is not None:
            events.append((l * (LW // w), l, -w))  # stops at its limit
    events.sort(key=lambda ev: ev[0])

    const, slope = low, 0
    for pos, dconst, dslope in events:
        if slope and const * LW + slope * pos >= target * LW:
            break
        const += dconst
        slope += dslope
    # slope > 0 here: phi has not reached A yet and feasibility guarantees it will
    num, den = target - const, slope
    alloc = []
    for w, m, l in zip(W, M, L):
        v = num * w
        if v <= m * den:
            alloc.append(Fraction(m, D))
        elif l is not None and v >= l * den:
            alloc.append(Fraction(l, D))
        else:
            alloc.append(Fraction(v, den * D))
    return PswcSolution(tuple(alloc), Fraction(num, den))


def pswc(capacity, weights, minima, limits) -> tuple[Fraction, ...]:
    """Convenience wrapper returning only the allocation."""
    return solve(PswcProblem(capacity, tuple(weights), tuple(minima), tuple(limits))).allocation


def oracle_solve(problem: PswcProblem, tol: float = 1e-9) -> tuple[Fraction, ...]:
    """Independent check of :func:`solve`: float bisection on phi, exact clamp at the end.

    Every component of the allocation is monotone in x, so once
    ``|phi(x) - A| <= tol`` each component is within ``tol`` of the exact answer.
    Test use only.
    """
    problem.check_feasible()
    A = float(problem.capacity)
    w = [float(v) for v in problem.weights]
    m = [float(v) for v in problem.minima]
    l = [float("inf") if v is None else float(v) for v in problem.limits]

    def phi(x):
        return sum(min(max(x * wi, mi), li) for wi, mi, li in zip(w, m, l))

    lo = 0.0
    hi = max([mi / wi for wi, mi in zip(w, m)] + [li / wi for wi, li in zip(w, l) if li != float("inf")])
    hi = max(hi, 1.0)
    while phi(hi) < A:
        hi *= 2
    x = lo
    for _ in range(400):
        x = (lo + hi) / 2
        val = phi(x)
        if abs(val - A) <= tol:
            break
        if val < A:
            lo = x
        else:
            hi = x
    exact = Fraction(x)
    return tuple(problem.clamp(exact, i) for i in range(problem.n))
