from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from creditfair.workloads import (ROUND_15_MIN_US, EmptyTraceError, NoAgentsError, TaskEvent,
                                  WorkloadConfig, WorkloadError, bucket_trace, demand_table,
                                  filter_agents, paper_instance, paper_instances, read_trace_csv,
                                  synth_bursty)

MIN = 60 * 1_000_000


def ev(minute, agent, req):
    return TaskEvent(minute * MIN, agent, req)


def test_same_round_requests_add_up():
    ids, cols = demand_table([ev(3, "A", "0.2"), ev(10, "A", "0.3")], WorkloadConfig())
    assert ids == ["A"] and cols == [[F(1, 2)]]


def test_rounds_are_fifteen_minutes():
    events = [ev(0, "A", 1), ev(14, "A", 1), ev(15, "A", 2), ev(44, "B", 3)]
    ids, cols = demand_table(events, WorkloadConfig())
    assert ids == ["A", "B"]
    assert cols == [[2, 2, 0], [0, 0, 3]]


def test_origin_aligns_to_round_boundary():
    start = 7 * ROUND_15_MIN_US + 5
    events = [TaskEvent(start, "A", 1), TaskEvent(8 * ROUND_15_MIN_US, "A", 2)]
    _, cols = demand_table(events, WorkloadConfig())
    assert cols == [[1, 2]]


def test_filters():
    ids, cols = filter_agents(["a", "b", "c"], [[2, 2, 2], [0, 0, 6], [0, 0, F(1, 50)]], F(1, 100))
    assert ids == ["b"] and cols == [[0, 0, 6]]


def test_endowment_is_mean_demand():
    events = [ev(30, "x", 6), ev(0, "y", 1), ev(20, "y", 2)]
    inst, ids = bucket_trace(events, return_ids=True)
    assert ids == ["x", "y"]
    assert inst.endowments == (2, 1)
    assert inst.demands == ((0, 1), (0, 2), (6, 0))


def test_bucket_errors():
    with pytest.raises(EmptyTraceError):
        bucket_trace([])
    with pytest.raises(NoAgentsError):
        bucket_trace([ev(0, "A", 1), ev(20, "A", 1)])


def test_caps_and_selection():
    events = [ev(15 * r, a, (k + 1) * (r % 2)) for r in range(6) for k, a in enumerate("pqrs")]
    inst, ids = bucket_trace(events, WorkloadConfig(n_agents=2, n_rounds=4), return_ids=True)
    assert ids == ["r", "s"] and inst.rounds == 4
    cfg = WorkloadConfig(n_agents=2, selection="random", seed=3)
    assert bucket_trace(events, cfg, return_ids=True)[1] == bucket_trace(events, cfg, return_ids=True)[1]
    with pytest.raises(ValueError):
        WorkloadConfig(selection="best")


def test_read_trace_csv(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("timestamp_us,agent_id,cpu_request\n0,a,1/2\n900000000,a,0.25\n")
    events = read_trace_csv(path)
    assert [e.cpu_request for e in events] == [F(1, 2), F(1, 4)]
    bad = tmp_path / "bad.csv"
    bad.write_text("time,agent\n0,a\n")
    with pytest.raises(WorkloadError):
        read_trace_csv(bad)


def test_task_event_validation():
    with pytest.raises(ValueError):
        TaskEvent(-1, "a", 1)
    with pytest.raises(ValueError):
        TaskEvent(0, "a", -1)


@given(st.lists(st.tuples(st.integers(0, 10 * ROUND_15_MIN_US), st.sampled_from("abcd"),
                          st.integers(0, 9)), min_size=1, max_size=40))
def test_bucketing_conserves_requests(rows):
    events = [TaskEvent(t, a, r) for t, a, r in rows]
    ids, cols = demand_table(events, WorkloadConfig())
    assert sum(sum(c) for c in cols) == sum(r for _, _, r in rows)
    assert demand_table(list(reversed(events)), WorkloadConfig()) == (ids, cols)


def test_synth_determinism_and_totals():
    cfg = WorkloadConfig(n_agents=50, n_rounds=500, seed=7)
    a, b = synth_bursty(cfg), synth_bursty(cfg)
    assert a == b
    assert a.n == 50 and a.rounds == 500
    assert a.total == sum(sum(row) for row in a.demands) / a.rounds
    assert synth_bursty(WorkloadConfig(n_agents=50, n_rounds=500, seed=8)) != a


def test_synth_errors():
    with pytest.raises(NoAgentsError):
        synth_bursty(WorkloadConfig(n_agents=5, n_rounds=20, burst_amplitude=1))
    with pytest.raises(WorkloadError):
        synth_bursty(WorkloadConfig(n_agents=0, n_rounds=20))
    with pytest.raises(ValueError):
        WorkloadConfig(steady_fraction=2)


def test_paper_instances():
    assert set(paper_instances()) == {"motivating_example", "prop43", "thm44", "thm44_misreport"}
    thm = paper_instance("thm44")
    assert thm.endowments == (1, 1, 1)
    assert thm.demands == ((1, 3, 0), (2, 0, 2), (0, 1, 2), (0, 1, 2), (3, 2, 0))
    mis = paper_instance("thm44_misreport")
    assert mis.demands[0] == (0, 3, 0) and mis.truth == thm.demands
    with pytest.raises(KeyError):
        paper_instance("table2")
