"""Command-line front end.

Exit status: 0 on success, 1 when a verdict fails, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .core import AllocationTrace, Instance, fmt_num, to_num
from .credit_audit import (NotParetoEfficient, audit_explicit, check_osp,
                           refute_credit_existence, sp_search)
from .mechanisms import get_mechanism, run
from .metrics import METRIC_COLUMNS, trace_metrics
from .repro import SUITES, reproduce
from .workloads import (RNG_NAME, WorkloadConfig, WorkloadError, bucket_trace, paper_instance,
                        paper_instances, read_trace_csv, synth_bursty)

logger = logging.getLogger("creditfair")

TRACE_SCHEMA = "creditfair.trace/v1"
INSTANCE_SCHEMA = "creditfair.instance/v1"
SUMMARY_HEADER = ["mechanism"] + [c for m in METRIC_COLUMNS for c in (m, f"{m}_std")]

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt_float(x: float) -> str:
    return "nan" if math.isnan(x) else format(x, ".12g")


def json_float(x: float):
    return None if math.isnan(x) else float(fmt_float(x))


def dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# --- configuration ---------------------------------------------------------

DEFAULTS = {
    "instance": "synthetic",
    "mechanisms": "lendrecoup,smmf,dmmf,karma",
    "alpha": "1/2",
    "rounds": "500",
    "agents": "50",
    "seeds": "0",
    "out": "results",
    "format": "csv,json",
    "jobs": "1",
}


def read_config(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def parse_seeds(text: str) -> list[int]:
    """``"3"``, ``"0,2,5"`` or an inclusive range ``"0-9"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise UsageError("no seeds given")
    return seeds


@dataclass
class ExperimentConfig:
    instance: str
    mechanisms: list
    alpha: Fraction
    rounds: int
    agents: int
    seeds: list
    out: Path
    formats: set
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    @classmethod
    def resolve(cls, args) -> "ExperimentConfig":
        merged = dict(DEFAULTS)
        if getattr(args, "config", None):
            merged.update(read_config(args.config))
        for key in DEFAULTS:
            val = getattr(args, key, None)
            if val is not None:
                merged[key] = str(val)
        try:
            alpha = to_num(merged["alpha"])
            mechanisms = [m.strip().lower() for m in merged["mechanisms"].split(",") if m.strip()]
            cfg = cls(merged["instance"], mechanisms, alpha, int(merged["rounds"]),
                      int(merged["agents"]), parse_seeds(merged["seeds"]), Path(merged["out"]),
                      {f.strip() for f in merged["format"].split(",") if f.strip()},
                      int(merged["jobs"]))
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(str(exc)) from exc
        if not cfg.mechanisms:
            raise UsageError("at least one mechanism is required")
        if not 0 <= cfg.alpha <= 1:
            raise UsageError("alpha must lie in [0, 1]")
        if not cfg.formats <= {"csv", "json"}:
            raise UsageError("format must be csv, json or both")
        for name in cfg.mechanisms:
            try:
                get_mechanism(name, cfg.alpha)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        return cfg


def load_instance(source: str, *, agents: int, rounds: int, seed: int) -> Instance:
    if source == "synthetic":
        return synth_bursty(WorkloadConfig(n_agents=agents, n_rounds=rounds, seed=seed))
    name = source[len("paper:"):] if source.startswith("paper:") else source
    if name in paper_instances():
        return paper_instance(name)
    path = Path(source)
    if not path.exists():
        raise UsageError(f"instance source {source!r} is neither a named example instance nor a file")
    if path.suffix == ".csv":
        return bucket_trace(read_trace_csv(path),
                            WorkloadConfig(n_agents=agents, n_rounds=rounds, seed=seed))
    obj = json.loads(path.read_text(encoding="utf-8"))
    return Instance.from_json(obj.get("instance", obj))


# --- run -------------------------------------------------------------------

def _one_run(cfg: ExperimentConfig, mech_name: str, seed: int):
    inst = load_instance(cfg.instance, agents=cfg.agents, rounds=cfg.rounds, seed=seed)
    mech = get_mechanism(mech_name, cfg.alpha)
    trace = run(mech, inst)
    row = trace_metrics(inst, trace)
    doc = None
    if "json" in cfg.formats:
        doc = trace_document(inst, trace, mech.alpha, seed)
        doc["metrics"] = {k: json_float(v) for k, v in zip(METRIC_COLUMNS, row.values())}
    return mech_name, seed, row, doc


def trace_document(inst: Instance, trace: AllocationTrace, alpha=None, seed=None) -> dict:
    doc = {"schema_id": TRACE_SCHEMA, "instance": inst.to_json(), "seed": seed,
           "alpha": None if alpha is None else fmt_num(alpha), "rng": RNG_NAME}
    doc.update(trace.to_json())
    return doc


def summarize(rows) -> list[list[str]]:
    """rows: list of (mechanism, MetricsRow) in output order."""
    by_mech = {}
    for mech, row in rows:
        by_mech.setdefault(mech, []).append(row)
    table = []
    for mech, mrows in by_mech.items():
        line = [mech]
        for col in METRIC_COLUMNS:
            vals = [getattr(r, col) for r in mrows]
            finite = [v for v in vals if not math.isnan(v)]
            mean = statistics.fmean(finite) if finite else math.nan
            std = statistics.pstdev(finite) if finite else math.nan
            line += [fmt_float(mean), fmt_float(std)]
        table.append(line)
    return table


def cmd_run(args) -> int:
    cfg = ExperimentConfig.resolve(args)
    cfg.out.mkdir(parents=True, exist_ok=True)
    cells = [(m, s) for m in cfg.mechanisms for s in cfg.seeds]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_one_run, [cfg] * len(cells), *zip(*cells)))
    else:
        results = [_one_run(cfg, m, s) for m, s in cells]
    for mech, seed, _row, doc in results:
        if doc is not None:
            dump_json(doc, cfg.out / f"trace_{mech}_seed{seed}.json")
    table = summarize([(mech, row) for mech, _s, row, _d in results])
    if "csv" in cfg.formats:
        with open(cfg.out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(SUMMARY_HEADER)
            writer.writerows(table)
    print("".join(h.ljust(20) for h in ["mechanism"] + list(METRIC_COLUMNS)))
    for line in table:
        means = line[1::2]
        print(line[0].ljust(20) + "".join(v.ljust(20) for v in means))
    return EXIT_OK


# --- repro -----------------------------------------------------------------

def cmd_repro(args) -> int:
    checks = reproduce(args.which)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


# --- audit -----------------------------------------------------------------

def _render_explicit(report) -> None:
    print(f"{'condition':<10}{'pass':>8}{'fail':>8}{'n/a':>8}")
    for cond, (p, f, na) in report.summary().items():
        print(f"{cond:<10}{p:>8}{f:>8}{na:>8}")
    for e in report.failures[:20]:
        agent = "-" if e.agent is None else e.agent + 1
        wit = ", ".join(f"{k}={fmt_num(v) if isinstance(v, Fraction) else v}"
                        for k, v in e.witness.items())
        print(f"FAIL {e.condition} round={e.round + 1} agent={agent} {wit}")


def cmd_audit(args) -> int:
    try:
        doc = json.loads(Path(args.trace).read_text(encoding="utf-8"))
        inst = Instance.from_json(doc["instance"])
        trace = AllocationTrace.from_json(doc, inst)
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"cannot read trace {args.trace}: {exc}") from exc

    if args.mode == "explicit":
        try:
            report = audit_explicit(inst, trace)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        _render_explicit(report)
        result, ok = report.to_json(), report.passed
    elif args.mode == "refute":
        try:
            ref = refute_credit_existence(inst, trace)
        except NotParetoEfficient as exc:
            raise UsageError(str(exc)) from exc
        print(ref.verdict if not ref.refuted else
              f"REFUTED round={ref.round + 1} {ref.condition} agent={ref.agent + 1 if ref.agent is not None else '-'}"
              f" trigger={ref.other + 1 if ref.other is not None else '-'}: {ref.detail}")
        result, ok = ref.to_json(), not ref.refuted
    else:
        mech = _trace_mechanism(doc)
        if args.mode == "osp":
            rep = check_osp(mech, inst)
            print("PASS" if rep.passed else
                  f"FAIL agent={rep.witness.agent + 1} round={rep.witness.round + 1} "
                  f"report={fmt_num(rep.witness.report)}")
            result, ok = rep.to_json(), rep.passed
        else:
            top = int(max((max(r) for r in inst.truth), default=0))
            try:
                res = sp_search(mech, inst, range(top + 1), max_schedules=args.max_schedules)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
            print(f"best misreport gain {fmt_num(res.best_delta)} over {res.schedules} schedules")
            result = {"kind": "sp", "passed": res.passed, "best_delta": fmt_num(res.best_delta),
                      "agent": res.agent,
                      "schedule": None if res.schedule is None else [fmt_num(v) for v in res.schedule],
                      "schedules": res.schedules}
            ok = res.passed
    if args.out:
        dump_json(result, Path(args.out))
    return EXIT_OK if ok else EXIT_FAIL


def _trace_mechanism(doc):
    name = doc.get("mechanism")
    if not name:
        raise UsageError("trace does not name its mechanism")
    try:
        return get_mechanism(name, to_num(doc.get("alpha") or "1/2"))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


# --- generate --------------------------------------------------------------

def cmd_generate(args) -> int:
    inst = load_instance(args.instance, agents=args.agents, rounds=args.rounds, seed=args.seed)
    doc = {"schema_id": INSTANCE_SCHEMA, "rng": RNG_NAME, "seed": args.seed,
           "source": args.instance, "instance": inst.to_json()}
    dump_json(doc, Path(args.out))
    print(f"wrote {inst.n} agents x {inst.rounds} rounds to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="creditfair",
                                     description="Shared resource pool mechanisms and credit-fairness audits")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate mechanisms and summarise metrics")
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--instance", help="synthetic | paper:NAME | trace.csv | instance.json")
    p.add_argument("--mechanisms", help="comma list of lendrecoup,smmf,dmmf,karma,static")
    p.add_argument("--alpha", help="Karma guarantee fraction (default 1/2)")
    p.add_argument("--rounds", type=int)
    p.add_argument("--agents", type=int)
    p.add_argument("--seeds", help="e.g. 0-9 or 1,4,7")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", help="csv, json or csv,json")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("repro", help="re-derive the hand-worked examples")
    p.add_argument("which", nargs="?", default="all", choices=("all",) + SUITES)
    p.set_defaults(func=cmd_repro)

    p = sub.add_parser("audit", help="audit a saved trace")
    p.add_argument("trace")
    p.add_argument("--mode", choices=("explicit", "refute", "osp", "sp"), default="explicit")
    p.add_argument("--out", help="write the report as JSON")
    p.add_argument("--max-schedules", type=int, default=50_000)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("generate", help="write an instance JSON")
    p.add_argument("--instance", default="synthetic")
    p.add_argument("--agents", type=int, default=50)
    p.add_argument("--rounds", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, WorkloadError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
