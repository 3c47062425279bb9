"""Summary metrics over final cumulative utilities.

Ratios are computed exactly and converted to float at the end; the Nash
welfare terms need ``log`` so they are float from the start.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import AllocationTrace, Instance, static_utility

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("nw", "min_six", "pct_si_violations", "wmm", "nmm", "weq", "neq")


def lower_median(values: Sequence[Fraction]) -> Fraction:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


@dataclass(frozen=True)
class SharingIndex:
    ratios: dict  # agent -> U_i / U_i^static, only for agents with U_i^static > 0
    minimum: Optional[Fraction]
    pct_violations: Optional[Fraction]
    excluded: tuple[int, ...] = ()


def sharing_index(U: Sequence[Fraction], U_static: Sequence[Fraction]) -> SharingIndex:
    ratios = {}
    excluded = []
    for i, (u, s) in enumerate(zip(U, U_static)):
        if s <= 0:
            excluded.append(i)
            continue
        ratios[i] = Fraction(u) / s
    if excluded:
        logger.warning("sharing index: %d agent(s) with zero standalone utility excluded", len(excluded))
    if not ratios:
        return SharingIndex({}, None, None, tuple(excluded))
    below = sum(1 for r in ratios.values() if r < 1)
    return SharingIndex(ratios, min(ratios.values()), Fraction(100 * below, len(ratios)),
                        tuple(excluded))


def weights(endowments: Sequence[Fraction]) -> list[Fraction]:
    total = sum(endowments, Fraction(0))
    return [Fraction(e) / total for e in endowments]


def _retained_for_log(U, U_static):
    keep = [i for i, (u, s) in enumerate(zip(U, U_static)) if u > 0 and s > 0]
    if len(keep) < len(U):
        logger.warning("nash welfare: %d agent(s) with zero utility excluded", len(U) - len(keep))
    return keep


def nash_welfare(U: Sequence[Fraction], endowments: Sequence[Fraction]) -> float:
    """sum_i w_i log U_i with w_i = e_i / E; agents with U_i <= 0 are skipped."""
    w = weights(endowments)
    skipped = [i for i, u in enumerate(U) if u <= 0]
    if skipped:
        logger.warning("nash welfare: %d agent(s) with zero utility excluded", len(skipped))
    return math.fsum(float(wi) * math.log(u) for wi, u in zip(w, U) if u > 0)


def normalized_nash_welfare(U, U_static, endowments) -> float:
    """NW(U) / NW(U_static) over agents where both utilities are positive."""
    keep = _retained_for_log(U, U_static)
    w = weights(endowments)
    num = math.fsum(float(w[i]) * math.log(U[i]) for i in keep)
    den = math.fsum(float(w[i]) * math.log(U_static[i]) for i in keep)
    if den == 0:
        return math.nan
    return num / den


def _per_weight(U, endowments):
    return [Fraction(u) / w for u, w in zip(U, weights(endowments))]


def min_max_ratios(U, U_static, endowments) -> tuple[Optional[Fraction], Optional[Fraction]]:
    """(WMM, NMM); either is None when its denominator is zero."""
    scaled = _per_weight(U, endowments)
    top = max(scaled)
    wmm = min(scaled) / top if top > 0 else None
    six = list(sharing_index(U, U_static).ratios.values())
    nmm = min(six) / max(six) if six and max(six) > 0 else None
    return wmm, nmm


def equity_ratios(U, U_static, endowments) -> tuple[Optional[Fraction], Optional[Fraction]]:
    """(WEq, NEq) using the lower median."""
    scaled = _per_weight(U, endowments)
    med = lower_median(scaled)
    weq = min(scaled) / med if med > 0 else None
    six = list(sharing_index(U, U_static).ratios.values())
    neq = None
    if six:
        smed = lower_median(six)
        neq = min(six) / smed if smed > 0 else None
    return weq, neq


@dataclass(frozen=True)
class MetricsRow:
    mechanism: str
    nw: float
    min_six: float
    pct_si_violations: float
    wmm: float
    nmm: float
    weq: float
    neq: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, c) for c in METRIC_COLUMNS)

    def to_dict(self) -> dict:
        return asdict(self)


def _f(x) -> float:
    return math.nan if x is None else float(x)


def compute_metrics(U, U_static, endowments, mechanism: str = "") -> MetricsRow:
    six = sharing_index(U, U_static)
    wmm, nmm = min_max_ratios(U, U_static, endowments)
    weq, neq = equity_ratios(U, U_static, endowments)
    return MetricsRow(mechanism, normalized_nash_welfare(U, U_static, endowments),
                      _f(six.minimum), _f(six.pct_violations),
                      _f(wmm), _f(nmm), _f(weq), _f(neq))


def trace_metrics(instance: Instance, trace: AllocationTrace) -> MetricsRow:
    return compute_metrics(trace.totals(instance), static_utility(instance),
                           instance.endowments, trace.mechanism)
