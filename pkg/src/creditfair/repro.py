"""Golden checks on the hand-worked instances, shared by ``creditfair repro``."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .core import Instance, fmt_num, is_pareto_efficient
from .credit_audit import audit_explicit, refute_credit_existence, sp_probe
from .mechanisms import LENDRECOUP, SMMF, STATIC, run
from .workloads import paper_instance

SUITES = ("motivating", "prop43", "thm44", "static_cf")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    expected: str
    actual: str

    @property
    def passed(self) -> bool:
        return self.expected == self.actual

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.suite}: {self.name}  expected={self.expected}  actual={self.actual}"


def _vec(values) -> str:
    return "(" + ", ".join(fmt_num(Fraction(v)) for v in values) + ")"


def _rows(matrix) -> str:
    return " ".join(_vec(r) for r in matrix)


def _motivating():
    inst = paper_instance("motivating_example")
    smmf = run(SMMF, inst)
    lr = run(LENDRECOUP, inst)
    yield Check("motivating", "SMMF allocations", "(3/2, 3/2, 0) (3/2, 3/2, 0) (1, 1, 1)",
                _rows(smmf.allocations))
    yield Check("motivating", "SMMF utilities", "(4, 4, 1)", _vec(smmf.totals(inst)))
    yield Check("motivating", "LendRecoup utilities", "(3, 3, 3)", _vec(lr.totals(inst)))
    yield Check("motivating", "LendRecoup explicit audit", "PASS",
                "PASS" if audit_explicit(inst, lr) else "FAIL")
    yield Check("motivating", "LendRecoup Pareto efficient", "PASS",
                "PASS" if is_pareto_efficient(inst, lr) else "FAIL")
    yield Check("motivating", "static utilities", "(3, 3, 1)", _vec(run(STATIC, inst).totals(inst)))


def _prop43():
    inst = paper_instance("prop43")
    trace = run(SMMF, inst)
    yield Check("prop43", "SMMF allocations", "(0, 2) (1, 1)", _rows(trace.allocations))
    ref = refute_credit_existence(inst, trace)
    where = f"{ref.verdict} round={None if ref.round is None else ref.round + 1} " \
            f"{ref.condition} j={None if ref.other is None else ref.other + 1}"
    yield Check("prop43", "no credit system exists", "REFUTED round=2 CF5 j=2", where)
    audit = audit_explicit(inst, trace)
    fail = next((f for f in audit.failures if f.condition == "CF5"), None)
    got = "none" if fail is None else f"CF5 round={fail.round + 1} i={fail.agent + 1} j={fail.witness['trigger'] + 1}"
    yield Check("prop43", "lending ledger breaks CF5", "CF5 round=2 i=1 j=2", got)


def _thm44():
    inst = paper_instance("thm44")
    trace = run(LENDRECOUP, inst)
    yield Check("thm44", "truthful allocations",
                "(1, 2, 0) (1, 0, 2) (0, 1, 2) (0, 1, 2) (2, 1, 0)", _rows(trace.allocations))
    yield Check("thm44", "truthful credits at round start",
                "(0, 0, 0) (0, -1, 1) (0, 0, 0) (1, 0, -1) (2, 0, -2)", _rows(trace.credits[:5]))
    mis = paper_instance("thm44_misreport")
    mtrace = run(LENDRECOUP, mis)
    yield Check("thm44", "misreport allocations",
                "(0, 3, 0) (3/2, 0, 3/2) (0, 1, 2) (0, 1, 2) (3, 0, 0)", _rows(mtrace.allocations))
    yield Check("thm44", "misreport credits at round start",
                "(0, 0, 0) (1, -2, 1) (1/2, -1, 1/2) (3/2, -1, -1/2) (5/2, -1, -3/2)",
                _rows(mtrace.credits[:5]))
    probe = sp_probe(LENDRECOUP, inst, 0, [row[0] for row in mis.demands])
    yield Check("thm44", "agent 1 utility truthful -> misreport", "4 -> 9/2",
                f"{fmt_num(probe.truthful)} -> {fmt_num(probe.deviating)}")


def _static_cf(samples: int = 200, seed: int = 0):
    rng = random.Random(seed)
    failures = 0
    for name in ("motivating_example", "prop43", "thm44"):
        inst = paper_instance(name)
        failures += not audit_explicit(inst, run(STATIC, inst)).passed
    for _ in range(samples):
        n, T = rng.randint(1, 5), rng.randint(1, 8)
        inst = Instance.build([rng.randint(1, 3) for _ in range(n)],
                              [[rng.randint(0, 6) for _ in range(n)] for _ in range(T)])
        failures += not audit_explicit(inst, run(STATIC, inst)).passed
    yield Check("static_cf", f"static mechanism audit failures over {samples + 3} instances",
                "0", str(failures))


def reproduce(which: str = "all") -> list[Check]:
    table = {"motivating": _motivating, "prop43": _prop43, "thm44": _thm44,
             "static_cf": _static_cf}
    if which == "all":
        names = SUITES
    elif which in table:
        names = (which,)
    else:
        raise ValueError(f"unknown suite {which!r}; choose all or one of {', '.join(SUITES)}")
    return [check for name in names for check in table[name]()]
