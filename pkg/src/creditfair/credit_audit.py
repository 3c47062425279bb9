"""Credit-fairness auditing and incentive probes.

Three kinds of check live here:

* :func:`audit_explicit` evaluates CF1-CF5 against a credit ledger carried by
  the trace.
* :func:`refute_credit_existence` tries to prove that *no* ledger can make a
  Pareto-efficient trace credit fair, by propagating per-agent credit intervals
  forward. A refutation is sound; "consistent" proves nothing.
* :func:`check_osp` / :func:`sp_probe` / :func:`sp_search` replay a mechanism
  under alternative reports.

Utilities in CF1-CF5 are always taken against reported demands.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core import (AllocationTrace, Instance, check_shape, fmt_num, is_pareto_efficient,
                   round_utilities)
from .mechanisms import Mechanism, replay_states, run

ZERO = Fraction(0)

PASS, FAIL, NA = "PASS", "FAIL", "N/A"
CONDITIONS = ("CF1", "CF2", "CF3", "CF4", "CF5")


@dataclass(frozen=True)
class AuditEntry:
    round: int
    agent: Optional[int]  # None for the per-round CF3 entry
    condition: str
    status: str
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"round": self.round, "agent": self.agent, "condition": self.condition,
                "status": self.status,
                "witness": {k: fmt_num(v) if isinstance(v, Fraction) else v
                            for k, v in self.witness.items()}}


@dataclass(frozen=True)
class AuditReport:
    entries: tuple[AuditEntry, ...]

    @property
    def failures(self) -> list[AuditEntry]:
        return [e for e in self.entries if e.status == FAIL]

    @property
    def passed(self) -> bool:
        return not self.failures

    def __bool__(self):
        return self.passed

    def summary(self) -> dict:
        """condition -> (pass, fail, n/a) counts."""
        out = {c: [0, 0, 0] for c in CONDITIONS}
        for e in self.entries:
            out[e.condition][(PASS, FAIL, NA).index(e.status)] += 1
        return {c: tuple(v) for c, v in out.items()}

    def to_json(self) -> dict:
        return {"kind": "explicit", "passed": self.passed,
                "summary": {c: dict(zip(("pass", "fail", "n/a"), v))
                            for c, v in self.summary().items()},
                "failures": [e.to_json() for e in self.failures]}


def audit_explicit(instance: Instance, trace: AllocationTrace, credits=None) -> AuditReport:
    """Evaluate CF1-CF5 at every round with the given (or the trace's) ledger."""
    check_shape(instance, trace)
    ledger = trace.credits if credits is None else credits
    if ledger is None:
        raise ValueError("explicit audit needs a credit ledger")
    if len(ledger) != instance.rounds + 1:
        raise ValueError("credit ledger must have rounds + 1 rows")
    e = instance.endowments
    E = instance.total
    entries = []
    for t, (a, d) in enumerate(zip(trace.allocations, instance.demands)):
        c, c_next = ledger[t], ledger[t + 1]
        dc = [y - x for x, y in zip(c, c_next)]
        u = round_utilities(a, d)
        usum = sum(u, ZERO)
        for i in range(instance.n):
            gap = e[i] - u[i]
            lo, hi = min(ZERO, gap), max(ZERO, gap)
            ok = lo <= dc[i] <= hi
            entries.append(AuditEntry(t, i, "CF1", PASS if ok else FAIL,
                                      {"delta": dc[i], "low": lo, "high": hi}))
        for i in range(instance.n):
            others = usum - u[i]
            excess = others - instance.total_without(i)
            if excess > 0:
                ok = dc[i] >= excess
                entries.append(AuditEntry(t, i, "CF2", PASS if ok else FAIL,
                                          {"delta": dc[i], "required": excess}))
            else:
                entries.append(AuditEntry(t, i, "CF2", NA))
        total_dc = sum(dc, ZERO)
        entries.append(AuditEntry(t, None, "CF3", PASS if total_dc <= 0 else FAIL,
                                  {"sum_delta": total_dc}))
        for i in range(instance.n):
            need = min(d[i], e[i] + min(ZERO, c[i]))
            entries.append(AuditEntry(t, i, "CF4", PASS if a[i] >= need else FAIL,
                                      {"alloc": a[i], "required": need}))
        triggers = [j for j in range(instance.n) if a[j] > max(ZERO, e[j] + c[j])]
        for i in range(instance.n):
            if not triggers:
                entries.append(AuditEntry(t, i, "CF5", NA))
                continue
            ok = a[i] >= d[i] or a[i] >= e[i] + c[i]
            entries.append(AuditEntry(t, i, "CF5", PASS if ok else FAIL,
                                      {"trigger": triggers[0], "alloc": a[i],
                                       "demand": d[i], "adjusted_endowment": e[i] + c[i]}))
    return AuditReport(tuple(entries))


class NotParetoEfficient(ValueError):
    """The refuter's reasoning relies on Pareto efficiency."""


@dataclass(frozen=True)
class Refutation:
    refuted: bool
    round: Optional[int] = None
    condition: Optional[str] = None
    agent: Optional[int] = None
    other: Optional[int] = None  # CF5 triggering agent j
    detail: str = ""
    lower: tuple = ()
    upper: tuple = ()

    @property
    def verdict(self) -> str:
        return "REFUTED" if self.refuted else "CONSISTENT"

    def to_json(self) -> dict:
        return {"kind": "refute", "verdict": self.verdict, "round": self.round,
                "condition": self.condition, "agent": self.agent, "trigger": self.other,
                "detail": self.detail,
                "lower": [fmt_num(v) for v in self.lower],
                "upper": [fmt_num(v) for v in self.upper]}


def refute_credit_existence(instance: Instance, trace: AllocationTrace) -> Refutation:
    """Sound forward interval propagation over credit balances.

    ``lower[i] <= c_{i,t} <= upper[i]`` holds for every ledger satisfying
    CF1-CF5 up to round ``t``. Each refutation test checks a condition at the
    credits most favourable to the mechanism, so REFUTED means no ledger exists.
    """
    check_shape(instance, trace)
    pe = is_pareto_efficient(instance, trace)
    if not pe:
        raise NotParetoEfficient(f"trace is not Pareto efficient (round {pe.round}, agent {pe.agent})")
    n = instance.n
    e = instance.endowments
    E = instance.total
    lower = [ZERO] * n
    upper = [ZERO] * n

    def refuted(t, cond, i=None, j=None, detail=""):
        return Refutation(True, t, cond, i, j, detail, tuple(lower), tuple(upper))

    for t, (a, d) in enumerate(zip(trace.allocations, instance.demands)):
        # CF4: the requirement grows with c, so test at the lowest credit
        for i in range(n):
            need = min(d[i], e[i] + min(ZERO, lower[i]))
            if a[i] < need:
                return refuted(t, "CF4", i, detail=f"a={fmt_num(a[i])} < {fmt_num(need)} even at c={fmt_num(lower[i])}")
            if a[i] < d[i] and a[i] < e[i]:
                # a >= min(d, e + min(0, c)) with a < d, a < e forces c <= a - e
                upper[i] = min(upper[i], a[i] - e[i])
                if upper[i] < lower[i]:
                    return refuted(t, "CF4", i, detail="credit interval emptied")
        # CF5: premise surely holds if it holds at c_j = upper; consequent
        # surely fails if it fails at c_i = lower
        triggers = [j for j in range(n) if a[j] > max(ZERO, e[j] + upper[j])]
        if triggers:
            for i in range(n):
                if not (a[i] >= d[i] or a[i] >= e[i] + lower[i]):
                    return refuted(t, "CF5", i, triggers[0],
                                   detail=f"a_i={fmt_num(a[i])} below demand {fmt_num(d[i])} "
                                          f"and below e_i+c_i >= {fmt_num(e[i] + lower[i])}")

        u = round_utilities(a, d)
        if sum(d, ZERO) > E:
            # overdemanded round under PE: every delta is forced to e - a
            dlo = [e[i] - a[i] for i in range(n)]
            dhi = list(dlo)
        else:
            usum = sum(u, ZERO)
            dlo, dhi = [], []
            for i in range(n):
                gap = e[i] - u[i]
                lo, hi = min(ZERO, gap), max(ZERO, gap)
                excess = usum - u[i] - instance.total_without(i)
                if excess > 0:
                    lo = max(lo, excess)
                if lo > hi:
                    return refuted(t, "CF1/CF2", i, detail=f"delta interval [{fmt_num(lo)}, {fmt_num(hi)}] empty")
                dlo.append(lo)
                dhi.append(hi)
            if sum(dlo, ZERO) > 0:
                return refuted(t, "CF3", detail="sum of minimal credit changes is positive")
            lo_sum = sum(dlo, ZERO)
            dhi = [min(dhi[i], -(lo_sum - dlo[i])) for i in range(n)]
        lower = [lower[i] + dlo[i] for i in range(n)]
        upper = [upper[i] + dhi[i] for i in range(n)]
        # CF3 summed over rounds: total credit never exceeds zero
        lo_sum = sum(lower, ZERO)
        upper = [min(upper[i], -(lo_sum - lower[i])) for i in range(n)]
        for i in range(n):
            if upper[i] < lower[i]:
                return refuted(t, "CF3", i, detail="credit interval emptied")
    return Refutation(False, lower=tuple(lower), upper=tuple(upper))


def default_grid(instance: Instance) -> list[Fraction]:
    """Integers and half-integers from 0 to one past the largest demand."""
    top = max((max(row) for row in instance.demands + instance.truth), default=ZERO)
    hi = int(top) + 1
    return [Fraction(k, 2) for k in range(2 * hi + 1)]


@dataclass(frozen=True)
class OspWitness:
    agent: int
    round: int
    report: Fraction
    truthful_utility: Fraction
    deviating_utility: Fraction


@dataclass(frozen=True)
class OspReport:
    passed: bool
    witness: Optional[OspWitness] = None
    cells: int = 0

    def __bool__(self):
        return self.passed

    def to_json(self) -> dict:
        w = self.witness
        return {"kind": "osp", "passed": self.passed, "cells": self.cells,
                "witness": None if w is None else
                {"agent": w.agent, "round": w.round, "report": fmt_num(w.report),
                 "truthful_utility": fmt_num(w.truthful_utility),
                 "deviating_utility": fmt_num(w.deviating_utility)}}


def _truthful_for(instance: Instance, agent: int):
    return [tuple(truth[agent] if k == agent else rep[k] for k in range(instance.n))
            for rep, truth in zip(instance.demands, instance.truth)]


def check_osp(mechanism: Mechanism, instance: Instance,
              grid: Optional[Iterable[Fraction]] = None) -> OspReport:
    """Single-round deviations after a truthful history, for every (agent, round)."""
    grid = default_grid(instance) if grid is None else [Fraction(g) for g in grid]
    cells = 0
    for i in range(instance.n):
        reports = _truthful_for(instance, i)
        states = replay_states(mechanism, instance.endowments, reports)
        for t, row in enumerate(reports):
            true_d = instance.truth[t][i]
            honest = min(mechanism(states[t], row).allocations[i], true_d)
            for r in grid:
                cells += 1
                dev = list(row)
                dev[i] = r
                got = min(mechanism(states[t], dev).allocations[i], true_d)
                if got > honest:
                    return OspReport(False, OspWitness(i, t, r, honest, got), cells)
    return OspReport(True, None, cells)


@dataclass(frozen=True)
class SpProbe:
    truthful: Fraction
    deviating: Fraction

    @property
    def delta(self) -> Fraction:
        return self.deviating - self.truthful


def _agent_total(mechanism, instance, reports, agent) -> Fraction:
    trace = run(mechanism, instance, reports)
    return sum((min(row[agent], truth[agent])
                for row, truth in zip(trace.allocations, instance.truth)), ZERO)


def sp_probe(mechanism: Mechanism, instance: Instance, agent: int,
             schedule: Sequence[Fraction]) -> SpProbe:
    """Agent's total true utility when truthful vs. when reporting ``schedule``."""
    if len(schedule) != instance.rounds:
        raise ValueError("misreport schedule must cover every round")
    honest = _truthful_for(instance, agent)
    deviating = [tuple(Fraction(schedule[t]) if k == agent else row[k] for k in range(instance.n))
                 for t, row in enumerate(honest)]
    return SpProbe(_agent_total(mechanism, instance, honest, agent),
                   _agent_total(mechanism, instance, deviating, agent))


@dataclass(frozen=True)
class SpSearchResult:
    best_delta: Fraction
    agent: Optional[int] = None
    schedule: Optional[tuple[Fraction, ...]] = None
    schedules: int = 0

    @property
    def passed(self) -> bool:
        return self.best_delta <= 0


def sp_search(mechanism: Mechanism, instance: Instance, values: Iterable[Fraction],
              max_schedules: Optional[int] = None) -> SpSearchResult:
    """Exhaustive multi-round misreports over ``values`` for every agent."""
    values = [Fraction(v) for v in values]
    count = len(values) ** instance.rounds * instance.n
    if max_schedules is not None and count > max_schedules:
        raise ValueError(f"{count} schedules exceed the cap of {max_schedules}")
    best = SpSearchResult(ZERO)
    seen = 0
    for i in range(instance.n):
        honest_total = _agent_total(mechanism, instance, _truthful_for(instance, i), i)
        base = _truthful_for(instance, i)
        for sched in itertools.product(values, repeat=instance.rounds):
            seen += 1
            reports = [tuple(sched[t] if k == i else row[k] for k in range(instance.n))
                       for t, row in enumerate(base)]
            delta = _agent_total(mechanism, instance, reports, i) - honest_total
            if delta > best.best_delta:
                best = SpSearchResult(delta, i, tuple(sched))
    return SpSearchResult(best.best_delta, best.agent, best.schedule, seen)
