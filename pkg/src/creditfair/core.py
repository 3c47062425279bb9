"""Domain types and the per-round property predicates.

All quantities are exact rationals (:class:`fractions.Fraction`). Floats only
appear when metrics are rendered for output.

Indexing is 0-based for both rounds and agents throughout the Python API;
the CLI renders 1-based numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Num = Fraction
NumLike = Union[Fraction, int, str, float]

Matrix = tuple[tuple[Fraction, ...], ...]


def to_num(value: NumLike) -> Fraction:
    """Parse ``value`` into an exact rational.

    Strings may be ``"p/q"`` or decimal literals. Floats go through their
    shortest repr so that ``0.1`` becomes ``1/10`` rather than the binary
    expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


def qsum(values: Iterable[Fraction]) -> Fraction:
    """Exact sum over a common denominator, far cheaper than chained ``+``."""
    values = tuple(values)
    if not values:
        return Fraction(0)
    d = math.lcm(*(v.denominator for v in values))
    return Fraction(sum(v.numerator * (d // v.denominator) for v in values), d)


def vadd(xs: Sequence[Fraction], ys: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Elementwise exact sum of two vectors."""
    return tuple(Fraction(x.numerator * y.denominator + y.numerator * x.denominator,
                          x.denominator * y.denominator) for x, y in zip(xs, ys))


def fmt_num(value: Fraction) -> str:
    """Lossless string form: ``"3"`` or ``"3/2"``."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def to_float(value: Fraction) -> float:
    """Lossy conversion, for metric output only."""
    return float(value)


def _matrix(rows: Iterable[Iterable[NumLike]]) -> Matrix:
    return tuple(tuple(to_num(v) for v in row) for row in rows)


class ShapeError(ValueError):
    """Trace and instance dimensions disagree."""


@dataclass(frozen=True)
class Instance:
    """Endowments plus a rounds x agents matrix of reported demands.

    ``true_demands`` is only needed for incentive experiments; when absent the
    reports are taken to be truthful.
    """

    endowments: tuple[Fraction, ...]
    demands: Matrix
    true_demands: Optional[Matrix] = None

    def __post_init__(self):
        object.__setattr__(self, "endowments", tuple(to_num(e) for e in self.endowments))
        object.__setattr__(self, "demands", _matrix(self.demands))
        if self.true_demands is not None:
            object.__setattr__(self, "true_demands", _matrix(self.true_demands))
        if not self.endowments:
            raise ValueError("instance needs at least one agent")
        if any(e <= 0 for e in self.endowments):
            raise ValueError("endowments must be strictly positive")
        for name, mat in (("demands", self.demands), ("true_demands", self.true_demands)):
            if mat is None:
                continue
            for row in mat:
                if len(row) != self.n:
                    raise ShapeError(f"{name} row has {len(row)} entries, expected {self.n}")
                if any(d < 0 for d in row):
                    raise ValueError(f"{name} must be nonnegative")
        if self.true_demands is not None and len(self.true_demands) != len(self.demands):
            raise ShapeError("true_demands and demands have different round counts")

    @classmethod
    def build(cls, endowments, demands, true_demands=None) -> "Instance":
        return cls(tuple(endowments), _matrix(demands),
                   None if true_demands is None else _matrix(true_demands))

    @property
    def n(self) -> int:
        return len(self.endowments)

    @property
    def rounds(self) -> int:
        return len(self.demands)

    @property
    def total(self) -> Fraction:
        """E, the total endowment."""
        return sum(self.endowments, Fraction(0))

    def total_without(self, i: int) -> Fraction:
        """E_{-i}."""
        return self.total - self.endowments[i]

    @property
    def truth(self) -> Matrix:
        return self.demands if self.true_demands is None else self.true_demands

    def permuted(self, perm: Sequence[int]) -> "Instance":
        """Agent ``k`` of the result is agent ``perm[k]`` of ``self``."""
        def cols(mat):
            return None if mat is None else tuple(tuple(row[p] for p in perm) for row in mat)
        return Instance(tuple(self.endowments[p] for p in perm), cols(self.demands),
                        cols(self.true_demands))

    def to_json(self) -> dict:
        out = {
            "endowments": [fmt_num(e) for e in self.endowments],
            "demands": [[fmt_num(d) for d in row] for row in self.demands],
        }
        if self.true_demands is not None:
            out["true_demands"] = [[fmt_num(d) for d in row] for row in self.true_demands]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Instance":
        return cls.build(obj["endowments"], obj["demands"], obj.get("true_demands"))


def utility(alloc: Fraction, demand: Fraction) -> Fraction:
    return min(alloc, demand)


def round_utilities(allocs: Sequence[Fraction], demands: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(min(a, d) for a, d in zip(allocs, demands))


def cumulative(rows: Sequence[Sequence[Fraction]]) -> Matrix:
    out = []
    running = None
    for row in rows:
        running = tuple(row) if running is None else vadd(running, row)
        out.append(running)
    return tuple(out)


@dataclass(frozen=True)
class AllocationTrace:
    """Per-round allocations, reported-demand utilities and the credit ledger.

    ``credits`` has ``rounds + 1`` rows, row ``t`` being the balance at the
    start of round ``t``; it is ``None`` for traces loaded without a ledger.
    """

    allocations: Matrix
    utilities: Matrix
    cumulative_utilities: Matrix
    credits: Optional[Matrix] = None
    mechanism: str = ""
    branches: tuple[str, ...] = field(default=())

    @classmethod
    def from_allocations(cls, instance: Instance, allocations, credits=None,
                         mechanism: str = "", branches=()) -> "AllocationTrace":
        allocs = _matrix(allocations)
        utils = tuple(round_utilities(a, d) for a, d in zip(allocs, instance.demands))
        return cls(allocs, utils, cumulative(utils),
                   None if credits is None else _matrix(credits), mechanism, tuple(branches))

    @property
    def rounds(self) -> int:
        return len(self.allocations)

    def credit_deltas(self) -> Matrix:
        if self.credits is None:
            raise ValueError("trace carries no credit ledger")
        return tuple(tuple(b - a for a, b in zip(self.credits[t], self.credits[t + 1]))
                     for t in range(self.rounds))

    def true_utilities(self, instance: Instance) -> Matrix:
        return tuple(round_utilities(a, d) for a, d in zip(self.allocations, instance.truth))

    def totals(self, instance: Instance) -> tuple[Fraction, ...]:
        """Final cumulative utility per agent, measured against true demands."""
        n = instance.n
        return tuple(sum((row[i] for row in self.true_utilities(instance)), Fraction(0))
                     for i in range(n))

    def to_json(self) -> dict:
        out = {
            "mechanism": self.mechanism,
            "allocations": [[fmt_num(a) for a in row] for row in self.allocations],
            "credits": None if self.credits is None
            else [[fmt_num(c) for c in row] for row in self.credits],
        }
        if self.branches:
            out["branches"] = list(self.branches)
        return out

    @classmethod
    def from_json(cls, obj: dict, instance: Instance) -> "AllocationTrace":
        return cls.from_allocations(instance, obj["allocations"], obj.get("credits"),
                                    obj.get("mechanism", ""), obj.get("branches", ()))


def check_shape(instance: Instance, trace: AllocationTrace) -> None:
    if trace.rounds != instance.rounds:
        raise ShapeError(f"trace has {trace.rounds} rounds, instance has {instance.rounds}")
    for row in trace.allocations:
        if len(row) != instance.n:
            raise ShapeError(f"allocation row has {len(row)} agents, expected {instance.n}")
    if trace.credits is not None:
        if len(trace.credits) != instance.rounds + 1:
            raise ShapeError("credit ledger must have rounds + 1 rows")
        if any(len(row) != instance.n for row in trace.credits):
            raise ShapeError("credit row length mismatch")


@dataclass(frozen=True)
class Verdict:
    passed: bool
    round: Optional[int] = None
    agent: Optional[int] = None
    detail: str = ""

    def __bool__(self):
        return self.passed


def is_pareto_efficient(instance: Instance, trace: AllocationTrace) -> Verdict:
    """Whenever some agent is below its reported demand, utilities must sum to E."""
    check_shape(instance, trace)
    E = instance.total
    for t, (allocs, demands) in enumerate(zip(trace.allocations, instance.demands)):
        short = [i for i, (a, d) in enumerate(zip(allocs, demands)) if a < d]
        if not short:
            continue
        valued = sum(round_utilities(allocs, demands), Fraction(0))
        if valued != E:
            return Verdict(False, t, short[0],
                           f"utility sum {fmt_num(valued)} != E={fmt_num(E)}")
    return Verdict(True)


def static_utility(instance: Instance) -> tuple[Fraction, ...]:
    """Cumulative utility of keeping one's own endowment every round (true demands)."""
    return tuple(sum((min(row[i], e) for row in instance.truth), Fraction(0))
                 for i, e in enumerate(instance.endowments))


@dataclass(frozen=True)
class SharingReport:
    violations: dict  # agent -> first round index whose prefix falls short

    @property
    def passed(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.passed


def check_sharing_incentives(instance: Instance, trace: AllocationTrace) -> SharingReport:
    check_shape(instance, trace)
    violations = {}
    for i, e in enumerate(instance.endowments):
        got = standalone = Fraction(0)
        for t, (allocs, truth) in enumerate(zip(trace.allocations, instance.truth)):
            got += min(allocs[i], truth[i])
            standalone += min(truth[i], e)
            if got < standalone:
                violations[i] = t
                break
    return SharingReport(violations)
