import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from creditfair.core import (AllocationTrace, Instance, check_sharing_incentives,
                             is_pareto_efficient, round_utilities, static_utility)
from creditfair.credit_audit import (NotParetoEfficient, audit_explicit, check_osp, default_grid,
                                     refute_credit_existence, sp_probe, sp_search)
from creditfair.mechanisms import DMMF, LENDRECOUP, SMMF, STATIC, karma, run
from creditfair.workloads import paper_instance

from conftest import instances

# smallest SI-violating DMMF instance found by randomized search
DMMF_WITNESS = Instance.build((1, 1), ((0, 1), (3, 1)))


def test_lendrecoup_motivating_passes_audit():
    inst = paper_instance("motivating_example")
    report = audit_explicit(inst, run(LENDRECOUP, inst))
    assert report.passed
    summary = report.summary()
    assert summary["CF3"] == (3, 0, 0)
    assert summary["CF4"] == (9, 0, 0)


def test_static_passes_on_paper_instances():
    for name in ("motivating_example", "prop43", "thm44"):
        inst = paper_instance(name)
        assert audit_explicit(inst, run(STATIC, inst)).passed


def test_prop43_forced_ledger_breaks_cf5():
    inst = paper_instance("prop43")
    trace = run(SMMF, inst)
    ledger = ((0, 0), (1, -1), (1, -1))
    report = audit_explicit(inst, trace, [tuple(map(F, r)) for r in ledger])
    cf5 = [f for f in report.failures if f.condition == "CF5"]
    assert len(cf5) == 1
    assert (cf5[0].round, cf5[0].agent, cf5[0].witness["trigger"]) == (1, 0, 1)


def test_audit_requires_ledger():
    inst = paper_instance("prop43")
    trace = AllocationTrace.from_allocations(inst, [(0, 2), (1, 1)])
    with pytest.raises(ValueError):
        audit_explicit(inst, trace)
    with pytest.raises(ValueError):
        audit_explicit(inst, trace, [(0, 0)])


def test_audit_flags_cf3():
    inst = Instance.build((1, 1), ((1, 1),))
    trace = AllocationTrace.from_allocations(inst, [(1, 1)])
    report = audit_explicit(inst, trace, [(F(0), F(0)), (F(0), F(1))])
    assert {f.condition for f in report.failures} == {"CF1", "CF3"}


def test_refute_prop43():
    inst = paper_instance("prop43")
    ref = refute_credit_existence(inst, run(SMMF, inst))
    assert ref.refuted and ref.verdict == "REFUTED"
    assert (ref.round, ref.condition, ref.other) == (1, "CF5", 1)


def test_refute_dmmf_witness():
    inst = DMMF_WITNESS
    trace = run(DMMF, inst)
    assert [tuple(r) for r in trace.allocations] == [(1, 1), (F(3, 2), F(1, 2))]
    assert check_sharing_incentives(inst, trace).violations == {1: 1}
    ref = refute_credit_existence(inst, trace)
    assert (ref.verdict, ref.round, ref.condition, ref.agent) == ("REFUTED", 1, "CF4", 1)


def test_refuter_requires_pareto_efficiency():
    inst = paper_instance("prop43")
    trace = AllocationTrace.from_allocations(inst, [(0, 1), (1, 1)])
    with pytest.raises(NotParetoEfficient):
        refute_credit_existence(inst, trace)


def test_refute_consistent_on_lendrecoup_examples():
    for name in ("motivating_example", "thm44", "prop43"):
        inst = paper_instance(name)
        assert not refute_credit_existence(inst, run(LENDRECOUP, inst)).refuted


@given(instances())
def test_lendrecoup_properties(inst):
    trace = run(LENDRECOUP, inst)
    assert audit_explicit(inst, trace).passed
    assert check_sharing_incentives(inst, trace).passed
    assert not refute_credit_existence(inst, trace).refuted
    e, E = inst.endowments, inst.total
    c = trace.credits
    U = [F(0)] * inst.n
    S = [F(0)] * inst.n
    for t, (a, d) in enumerate(zip(trace.allocations, inst.demands)):
        u = round_utilities(a, d)
        ue = round_utilities(e, d)
        for i in range(inst.n):
            U[i] += u[i]
            S[i] += ue[i]
            assert U[i] + c[t + 1][i] >= S[i]
            if u[i] < ue[i]:
                assert c[t][i] < 0 and c[t + 1][i] <= 0
            if sum(d) > E:
                assert c[t + 1][i] - c[t][i] == e[i] - a[i]


@given(inst=instances(), mech=st.sampled_from([SMMF, DMMF, karma(F(1, 2)), LENDRECOUP]))
def test_credit_fair_and_efficient_implies_si(inst, mech):
    trace = run(mech, inst)
    if trace.credits is not None and audit_explicit(inst, trace).passed and is_pareto_efficient(inst, trace):
        assert check_sharing_incentives(inst, trace).passed


def _some_ledger_passes(inst, trace, step=F(1, 2), span=3):
    """Brute force over credit deltas on a grid; True if any ledger satisfies CF1-CF5."""
    grid = [k * step for k in range(-2 * span, 2 * span + 1)]
    ledgers = [[tuple([F(0)] * inst.n)]]
    for _ in range(inst.rounds):
        grown = []
        for led in ledgers:
            for delta in itertools.product(grid, repeat=inst.n):
                if sum(delta) > 0:
                    continue
                cand = led + [tuple(x + y for x, y in zip(led[-1], delta))]
                # prune on the rounds covered so far
                part = Instance.build(inst.endowments, inst.demands[:len(cand) - 1])
                ptrace = AllocationTrace.from_allocations(part, trace.allocations[:len(cand) - 1])
                if audit_explicit(part, ptrace, cand).passed:
                    grown.append(cand)
        ledgers = grown
        if not ledgers:
            return False
    return True


small = st.builds(
    lambda e, rows: Instance.build(e, rows),
    st.lists(st.integers(1, 2), min_size=2, max_size=2),
    st.lists(st.lists(st.integers(0, 3), min_size=2, max_size=2), min_size=1, max_size=2))


@settings(max_examples=40)
@given(inst=small, mech=st.sampled_from([SMMF, DMMF, LENDRECOUP]))
def test_refuter_soundness_against_brute_force(inst, mech):
    trace = run(mech, inst)
    if refute_credit_existence(inst, trace).refuted:
        assert not _some_ledger_passes(inst, trace)


def test_brute_force_finds_lendrecoup_ledger():
    inst = Instance.build((1, 1), ((2, 0), (0, 2)))
    assert _some_ledger_passes(inst, run(LENDRECOUP, inst))
    assert not _some_ledger_passes(DMMF_WITNESS, run(DMMF, DMMF_WITNESS))


def test_default_grid():
    grid = default_grid(paper_instance("prop43"))
    assert grid == [F(k, 2) for k in range(7)]


@settings(max_examples=40)
@given(inst=instances(max_agents=3, max_rounds=4, max_demand=4),
       mech=st.sampled_from([LENDRECOUP, SMMF, DMMF]))
def test_osp(inst, mech):
    assert check_osp(mech, inst).passed


def test_osp_catches_a_gainable_mechanism():
    # a mechanism that hands everything to the largest report is not OSP
    from creditfair.mechanisms import Mechanism, RoundResult, Branch

    def greedy(state, reports):
        k = max(range(len(reports)), key=lambda i: (reports[i], -i))
        E = sum(state.endowments)
        allocs = tuple(E if i == k else F(0) for i in range(len(reports)))
        return RoundResult(allocs, tuple(F(0) for _ in reports), Branch.STATIC)

    inst = Instance.build((1, 1), ((1, 2),))
    report = check_osp(Mechanism("greedy", greedy), inst)
    assert not report.passed
    assert report.witness.agent == 0 and report.witness.deviating_utility == 1


def test_sp_probe_thm44():
    inst = paper_instance("thm44")
    probe = sp_probe(LENDRECOUP, inst, 0, (0, 2, 0, 0, 3))
    assert (probe.truthful, probe.deviating, probe.delta) == (4, F(9, 2), F(1, 2))


def test_sp_probe_truthful_is_zero():
    inst = paper_instance("motivating_example")
    for mech in (LENDRECOUP, SMMF, DMMF):
        for i in range(inst.n):
            assert sp_probe(mech, inst, i, [row[i] for row in inst.demands]).delta == 0
    with pytest.raises(ValueError):
        sp_probe(SMMF, inst, 0, (1,))


def test_sp_search_schedule_count():
    inst = paper_instance("thm44")
    res = sp_search(LENDRECOUP, Instance.build(inst.endowments, inst.demands[:2]), range(4))
    assert res.schedules == 3 * 16
    with pytest.raises(ValueError):
        sp_search(SMMF, inst, range(3), max_schedules=10)


@settings(max_examples=25)
@given(instances(max_agents=3, max_rounds=3, max_demand=2))
def test_smmf_sp_exhaustive(inst):
    assert sp_search(SMMF, inst, range(3)).passed
