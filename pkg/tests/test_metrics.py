import math
from fractions import Fraction as F

from hypothesis import given, strategies as st

from creditfair.core import static_utility
from creditfair.mechanisms import LENDRECOUP, SMMF, STATIC, run
from creditfair.metrics import (METRIC_COLUMNS, compute_metrics, equity_ratios, lower_median,
                                min_max_ratios, nash_welfare, normalized_nash_welfare,
                                sharing_index, trace_metrics)
from creditfair.workloads import paper_instance

from conftest import instances

ONES = (1, 1, 1)
pos = st.integers(1, 20).map(F)


def test_sharing_index_examples():
    six = sharing_index((4, 4, 1), (3, 3, 1))
    assert six.ratios == {0: F(4, 3), 1: F(4, 3), 2: 1}
    assert (six.minimum, six.pct_violations) == (1, 0)
    six = sharing_index((F(29, 10), 3, 1), (3, 3, 1))
    assert six.minimum == F(29, 30)
    assert six.pct_violations == F(100, 3)
    assert sharing_index((2, 5), (2, 5)).ratios == {0: 1, 1: 1}


def test_sharing_index_excludes_zero_static(caplog):
    six = sharing_index((1, 2), (0, 2))
    assert six.excluded == (0,) and six.ratios == {1: 1}
    assert "excluded" in caplog.text
    empty = sharing_index((1,), (0,))
    assert empty.minimum is None and empty.pct_violations is None


def test_nash_welfare_examples():
    assert math.isclose(nash_welfare((4, 4, 1), ONES), (2 * math.log(4) + math.log(1)) / 3)
    assert math.isclose(nash_welfare((5, 5), (1, 3)), math.log(5))
    assert normalized_nash_welfare((3, 2), (3, 2), (1, 1)) == 1
    assert math.isnan(normalized_nash_welfare((1, 1), (1, 1), (1, 1)))


def test_ratio_examples():
    assert min_max_ratios((4, 4, 1), (3, 3, 1), ONES) == (F(1, 4), F(3, 4))
    assert equity_ratios((4, 4, 1), (3, 3, 1), ONES) == (F(1, 4), F(3, 4))
    assert min_max_ratios((2, 2), (1, 1), (1, 1)) == (1, 1)
    assert min_max_ratios((7,), (3,), (2,)) == (1, 1)
    assert equity_ratios((1, 3), (1, 3), (1, 1))[0] == 1
    assert min_max_ratios((0, 0), (0, 0), (1, 1)) == (None, None)


def test_lower_median():
    assert lower_median([3, 1, 2, 4]) == 2
    assert lower_median([5]) == 5


def test_motivating_row():
    inst = paper_instance("motivating_example")
    row = trace_metrics(inst, run(SMMF, inst))
    assert row.mechanism == "smmf"
    assert (row.min_six, row.pct_si_violations) == (1.0, 0.0)
    assert row.wmm == 0.25 and row.nmm == 0.75
    assert row.values() == tuple(getattr(row, c) for c in METRIC_COLUMNS)
    assert trace_metrics(inst, run(LENDRECOUP, inst)).min_six == 1.0


@given(instances())
def test_static_trace_is_neutral(inst):
    row = trace_metrics(inst, run(STATIC, inst))
    if not math.isnan(row.min_six):
        assert row.min_six == 1 and row.pct_si_violations == 0
        assert row.nmm == 1 and row.neq == 1


@given(st.lists(st.tuples(pos, pos, pos), min_size=1, max_size=6), pos, st.data())
def test_scale_and_permutation_invariance(agents, k, data):
    U, S, e = (list(col) for col in zip(*agents))
    base = compute_metrics(U, S, e)
    scaled = compute_metrics([u * k for u in U], [s * k for s in S], e)
    assert (base.min_six, base.nmm, base.neq) == (scaled.min_six, scaled.nmm, scaled.neq)
    only_u = compute_metrics([u * k for u in U], S, e)
    assert (base.wmm, base.weq) == (only_u.wmm, only_u.weq)
    perm = data.draw(st.permutations(range(len(U))))
    p = compute_metrics([U[i] for i in perm], [S[i] for i in perm], [e[i] for i in perm])
    assert base.values()[1:] == p.values()[1:]
    assert math.isclose(base.nw, p.nw, rel_tol=1e-12) or (math.isnan(base.nw) and math.isnan(p.nw))
    for v in (base.wmm, base.nmm, base.weq, base.neq):
        assert 0 <= v <= 1


def test_static_utility_uses_truth():
    inst = paper_instance("thm44_misreport")
    assert static_utility(inst) == static_utility(paper_instance("thm44"))
