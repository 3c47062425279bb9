"""Demand matrices from task-submission traces, synthetic bursts, and the
hand-worked instances used in the reproduction suite.

Trace CSV schema (header required)::

    timestamp_us,agent_id,cpu_request

``cpu_request`` is parsed exactly (decimal or ``p/q``). Each agent's demand in
a round is the sum of its requests submitted during that round.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .core import Instance, to_num

logger = logging.getLogger(__name__)

RNG_NAME = "numpy.random.Philox"
ROUND_15_MIN_US = 15 * 60 * 1_000_000


class WorkloadError(ValueError):
    pass


class EmptyTraceError(WorkloadError):
    pass


class NoAgentsError(WorkloadError):
    """Every agent was removed by the constant-demand / low-mean filters."""


@dataclass(frozen=True)
class TaskEvent:
    timestamp: int  # microseconds
    agent_id: str
    cpu_request: Fraction

    def __post_init__(self):
        object.__setattr__(self, "cpu_request", to_num(self.cpu_request))
        if self.timestamp < 0:
            raise ValueError("timestamps must be nonnegative")
        if self.cpu_request < 0:
            raise ValueError("cpu_request must be nonnegative")


@dataclass(frozen=True)
class WorkloadConfig:
    round_length: int = ROUND_15_MIN_US
    min_mean_demand: Fraction = Fraction(1, 100)
    n_agents: Optional[int] = None
    n_rounds: Optional[int] = None
    seed: int = 0
    selection: str = "top"  # or "random"
    # synthetic generator knobs
    base_max: int = 100
    burst_amplitude: int = 8
    burst_start_prob: float = 0.02
    burst_end_prob: float = 0.1
    steady_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "min_mean_demand", to_num(self.min_mean_demand))
        if self.round_length <= 0:
            raise ValueError("round_length must be positive")
        if self.selection not in ("top", "random"):
            raise ValueError("selection must be 'top' or 'random'")
        if self.base_max < 1 or self.burst_amplitude < 1:
            raise ValueError("base_max and burst_amplitude must be at least 1")
        for name in ("burst_start_prob", "burst_end_prob", "steady_fraction"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")


def read_trace_csv(path) -> list[TaskEvent]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"timestamp_us", "agent_id", "cpu_request"} - set(reader.fieldnames or ())
        if missing:
            raise WorkloadError(f"trace CSV lacks columns: {', '.join(sorted(missing))}")
        return [TaskEvent(int(row["timestamp_us"]), row["agent_id"], row["cpu_request"])
                for row in reader]


def demand_table(events: Iterable[TaskEvent], config: WorkloadConfig):
    """Per-agent demand columns before any filtering: ``(agent_ids, columns)``."""
    events = sorted(events, key=lambda ev: ev.timestamp)
    if not events:
        raise EmptyTraceError("trace has no events")
    L = config.round_length
    origin = events[0].timestamp // L * L
    sums = defaultdict(lambda: defaultdict(Fraction))
    last = 0
    for ev in events:
        r = (ev.timestamp - origin) // L
        if config.n_rounds is not None and r >= config.n_rounds:
            break
        sums[ev.agent_id][r] += ev.cpu_request
        last = max(last, r)
    rounds = last + 1
    ids = sorted(sums)
    columns = [[sums[a].get(r, Fraction(0)) for r in range(rounds)] for a in ids]
    return ids, columns


def filter_agents(ids, columns, min_mean: Fraction):
    """Drop agents whose demand never changes or whose mean is below ``min_mean``."""
    kept_ids, kept = [], []
    for a, col in zip(ids, columns):
        if all(d == col[0] for d in col):
            continue
        if Fraction(sum(col, Fraction(0)), len(col)) < min_mean:
            continue
        kept_ids.append(a)
        kept.append(col)
    return kept_ids, kept


def _select(ids, columns, config: WorkloadConfig):
    if config.n_agents is None or len(ids) <= config.n_agents:
        return ids, columns
    if config.selection == "top":
        order = sorted(range(len(ids)), key=lambda k: (-sum(columns[k], Fraction(0)), ids[k]))
        chosen = sorted(order[:config.n_agents])
    else:
        rng = np.random.Generator(np.random.Philox(config.seed))
        chosen = sorted(rng.choice(len(ids), size=config.n_agents, replace=False).tolist())
    return [ids[k] for k in chosen], [columns[k] for k in chosen]


def instance_from_columns(columns) -> Instance:
    """Endowment of each agent is its mean demand."""
    rounds = len(columns[0])
    endowments = [Fraction(sum(col, Fraction(0)), rounds) for col in columns]
    demands = [[col[t] for col in columns] for t in range(rounds)]
    return Instance.build(endowments, demands)


def bucket_trace(events: Iterable[TaskEvent], config: WorkloadConfig = WorkloadConfig(),
                 return_ids: bool = False):
    ids, columns = demand_table(events, config)
    ids, columns = filter_agents(ids, columns, config.min_mean_demand)
    if not ids:
        raise NoAgentsError("no agents survive the demand filters")
    ids, columns = _select(ids, columns, config)
    inst = instance_from_columns(columns)
    return (inst, ids) if return_ids else inst


def synth_bursty(config: WorkloadConfig) -> Instance:
    """Integer demands from two kinds of agent, each with a base level in
    ``[1, base_max]``.

    A steady agent (probability ``steady_fraction``) asks for its base level
    plus a coin-flip extra unit. A bursty agent idles at its base level and
    asks for ``base * burst_amplitude`` during burst episodes, which start with
    probability ``burst_start_prob`` and end with ``burst_end_prob`` each round
    (geometric durations). With amplitude 1 nothing varies and every agent is
    filtered out. Deterministic given ``config.seed``.
    """
    n, T = config.n_agents, config.n_rounds
    if not n or not T or n <= 0 or T <= 0:
        raise WorkloadError("synthetic workloads need positive n_agents and n_rounds")
    rng = np.random.Generator(np.random.Philox(config.seed))
    amp = config.burst_amplitude
    columns = []
    for _ in range(n):
        base = int(rng.integers(1, config.base_max + 1))
        if rng.random() < config.steady_fraction:
            wobble = rng.integers(0, 2, size=T) if amp > 1 else np.zeros(T, dtype=int)
            columns.append([Fraction(base + int(w)) for w in wobble])
            continue
        draws = rng.random(T)
        col, bursting = [], False
        for u in draws:
            bursting = u >= config.burst_end_prob if bursting else u < config.burst_start_prob
            col.append(Fraction(base * amp if bursting else base))
        columns.append(col)
    ids, columns = filter_agents(list(range(n)), columns, config.min_mean_demand)
    if not ids:
        raise NoAgentsError("every synthetic agent has constant demand; raise burst_amplitude")
    if len(ids) < n:
        logger.info("synthetic workload: %d constant agent(s) dropped", n - len(ids))
    return instance_from_columns(columns)


_ONES3 = (1, 1, 1)
_THM44 = ((1, 3, 0), (2, 0, 2), (0, 1, 2), (0, 1, 2), (3, 2, 0))


def paper_instances() -> dict[str, Instance]:
    """The hand-worked instances: motivating example, the two-agent SMMF
    counterexample, and the five-round impossibility instance (plus the
    variant where agent 0 under-reports in round 0)."""
    misreport = ((0, 3, 0),) + _THM44[1:]
    return {
        "motivating_example": Instance.build(_ONES3, ((2, 2, 0), (2, 2, 0), (2, 2, 6))),
        "prop43": Instance.build((1, 1), ((0, 2), (2, 2))),
        "thm44": Instance.build(_ONES3, _THM44),
        "thm44_misreport": Instance.build(_ONES3, misreport, _THM44),
    }


def paper_instance(name: str) -> Instance:
    catalog = paper_instances()
    if name not in catalog:
        raise KeyError(f"unknown example instance {name!r}; known: {', '.join(catalog)}")
    return catalog[name]
