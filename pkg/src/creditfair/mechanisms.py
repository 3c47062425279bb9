"""Online allocation mechanisms.

Every mechanism is a pure step function ``step(state, reports) -> RoundResult``;
:func:`run` folds it over an instance. All of them keep the same credit
bookkeeping ``c_{t+1} = c_t + e - a_t``. For LendRecoup this ledger drives
the allocation; for the others it is only recorded (and is identically zero
for the static mechanism).

The Karma implementation is a reconstruction from its published outline:
each agent is first guaranteed ``min(d', alpha * e)``, and the rest of the
pool is water-filled over cumulative consumed allocation. Consumption counts
only units up to demand, so idle surplus handed out in slack rounds does not
lower an agent's priority. With ``alpha = 0`` it coincides with DMMF.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import partial
from typing import Callable, Optional, Sequence

from .core import AllocationTrace, Instance, qsum, to_num, vadd
from .pswc import pswc

ZERO = Fraction(0)


class Branch(str, enum.Enum):
    NO_SHORTAGE = "no_shortage"
    SHORTAGE = "shortage"
    SHORTAGE_CAPPED = "shortage_capped"
    SHORTAGE_SURPLUS = "shortage_surplus"
    STATIC = "static"


@dataclass(frozen=True)
class MechanismState:
    endowments: tuple[Fraction, ...]
    t: int  # rounds already played
    past_alloc: tuple[Fraction, ...]
    past_util: tuple[Fraction, ...]  # cumulative min(a, d') per agent
    credits: tuple[Fraction, ...]

    @classmethod
    def initial(cls, endowments: Sequence[Fraction]) -> "MechanismState":
        e = tuple(to_num(v) for v in endowments)
        zeros = (ZERO,) * len(e)
        return cls(e, 0, zeros, zeros, zeros)

    @property
    def total(self) -> Fraction:
        return qsum(self.endowments)

    def advance(self, reports: Sequence[Fraction], result: "RoundResult") -> "MechanismState":
        a = result.allocations
        return replace(
            self,
            t=self.t + 1,
            past_alloc=vadd(self.past_alloc, a),
            past_util=vadd(self.past_util, [min(x, d) for x, d in zip(a, reports)]),
            credits=vadd(self.credits, result.credit_deltas),
        )


@dataclass(frozen=True)
class RoundResult:
    allocations: tuple[Fraction, ...]
    credit_deltas: tuple[Fraction, ...]
    branch: Branch
    capped: Optional[tuple[Fraction, ...]] = None


def _result(state, allocs, branch, capped=None) -> RoundResult:
    deltas = tuple(e - a for e, a in zip(state.endowments, allocs))
    return RoundResult(tuple(allocs), deltas, branch, capped)


def _no_shortage(state: MechanismState, reports) -> RoundResult:
    # surplus beyond demands is spread in proportion to endowments
    allocs = pswc(state.total, state.endowments, reports, [None] * len(reports))
    return _result(state, allocs, Branch.NO_SHORTAGE)


def _shifted(past, reports, lower, capacity, weights):
    """Water-fill cumulative totals, then return only this round's increment."""
    m = [p + g for p, g in zip(past, lower)]
    l = [p + d for p, d in zip(past, reports)]
    totals = pswc(capacity, weights, m, l)
    return tuple(x - p for x, p in zip(totals, past))


def lendrecoup_step(state: MechanismState, reports: Sequence[Fraction]) -> RoundResult:
    E = state.total
    e = state.endowments
    if qsum(reports) <= E:
        return _no_shortage(state, reports)
    capped = tuple(min(d, max(ZERO, ei + c)) for d, ei, c in zip(reports, e, state.credits))
    if E <= qsum(capped):
        allocs = pswc(E, e, [ZERO] * len(e), capped)
        return _result(state, allocs, Branch.SHORTAGE_CAPPED, capped)
    t = state.t + 1
    allocs = _shifted(state.past_alloc, reports, capped, t * E, e)
    return _result(state, allocs, Branch.SHORTAGE_SURPLUS, capped)


def smmf_step(state: MechanismState, reports: Sequence[Fraction]) -> RoundResult:
    E = state.total
    if qsum(reports) <= E:
        return _no_shortage(state, reports)
    allocs = pswc(E, state.endowments, [ZERO] * len(reports), reports)
    return _result(state, allocs, Branch.SHORTAGE)


def dmmf_step(state: MechanismState, reports: Sequence[Fraction]) -> RoundResult:
    E = state.total
    if qsum(reports) <= E:
        return _no_shortage(state, reports)
    past = state.past_util
    allocs = _shifted(past, reports, [ZERO] * len(reports), qsum(past) + E,
                      state.endowments)
    return _result(state, allocs, Branch.SHORTAGE)


def karma_step(state: MechanismState, reports: Sequence[Fraction], alpha=Fraction(1, 2)) -> RoundResult:
    alpha = to_num(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"karma alpha must lie in [0, 1], got {alpha}")
    E = state.total
    if qsum(reports) <= E:
        return _no_shortage(state, reports)
    guaranteed = tuple(min(d, alpha * ei) for d, ei in zip(reports, state.endowments))
    past = state.past_util
    allocs = _shifted(past, reports, guaranteed, qsum(past) + E, state.endowments)
    return _result(state, allocs, Branch.SHORTAGE, guaranteed)


def static_step(state: MechanismState, reports: Sequence[Fraction]) -> RoundResult:
    return _result(state, state.endowments, Branch.STATIC)


StepFn = Callable[[MechanismState, Sequence[Fraction]], RoundResult]


@dataclass(frozen=True)
class Mechanism:
    name: str
    step: StepFn
    alpha: Optional[Fraction] = None

    def __call__(self, state, reports):
        return self.step(state, reports)


LENDRECOUP = Mechanism("lendrecoup", lendrecoup_step)
SMMF = Mechanism("smmf", smmf_step)
DMMF = Mechanism("dmmf", dmmf_step)
STATIC = Mechanism("static", static_step)


def karma(alpha=Fraction(1, 2)) -> Mechanism:
    alpha = to_num(alpha)
    if not 0 <= alpha <= 1:
        raise ValueError(f"karma alpha must lie in [0, 1], got {alpha}")
    return Mechanism("karma", partial(karma_step, alpha=alpha), alpha)


MECHANISM_NAMES = ("lendrecoup", "smmf", "dmmf", "karma", "static")


def get_mechanism(name: str, alpha=Fraction(1, 2)) -> Mechanism:
    key = name.strip().lower()
    if key == "karma":
        return karma(alpha)
    table = {"lendrecoup": LENDRECOUP, "smmf": SMMF, "dmmf": DMMF, "static": STATIC}
    if key not in table:
        raise ValueError(f"unknown mechanism {name!r}; choose from {', '.join(MECHANISM_NAMES)}")
    return table[key]


def run(mechanism: Mechanism, instance: Instance, reports=None) -> AllocationTrace:
    """Play every round of ``instance`` (or of an override report matrix)."""
    reports = instance.demands if reports is None else reports
    state = MechanismState.initial(instance.endowments)
    allocs, credits, branches = [], [state.credits], []
    for row in reports:
        res = mechanism(state, row)
        state = state.advance(row, res)
        allocs.append(res.allocations)
        credits.append(state.credits)
        branches.append(res.branch.value)
    if reports is not instance.demands:
        instance = Instance(instance.endowments, tuple(reports), instance.truth)
    return AllocationTrace.from_allocations(instance, allocs, credits, mechanism.name, branches)


def replay_states(mechanism: Mechanism, endowments, reports) -> list[MechanismState]:
    """States at the start of each round (length ``len(reports) + 1``)."""
    state = MechanismState.initial(endowments)
    states = [state]
    for row in reports:
        state = state.advance(row, mechanism(state, row))
        states.append(state)
    return states
