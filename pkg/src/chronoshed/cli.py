"""Command-line front end.

    chronoshed solve --algo lpround --in inst.json [--g N] [--seed N] [--svg out.svg]
    chronoshed bound --in inst.json
    chronoshed verify --in inst.json --schedule sched.json
    chronoshed gen --kind integrality_gap --params g=2
    chronoshed bench --suite named --out results/

Exit status: 1 bad input or I/O, 2 infeasible instance, 3 verify found a
violation, 0 otherwise.
"""
from __future__ import annotations

import argparse
import csv
import json
import random
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import active, busy, gantt, instances, oracle
from .core import ActiveInstance, BusyInstance, Job, TimeInterval, lower_bounds, mass, to_fraction
from .maxflow import check_feasibility, validate_assignment

EXIT_INPUT, EXIT_INFEASIBLE, EXIT_VIOLATION = 1, 2, 3
ACTIVE_ALGOS = ("minimal", "lpround")
BUSY_ALGOS = ("tracking", "busy3", "preempt-inf", "preempt-g")
CSV_COLUMNS = ["instance", "kind", "n", "g", "algo", "cost", "mass", "span", "profile", "oracle", "ratio", "ms"]
DEFAULT_ORACLE_MS = 5000


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors count as bad input; exit 2 is reserved for infeasible instances
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _num(x) -> Optional[str]:
    if x is None:
        return None
    x = to_fraction(x)
    return str(x)


@dataclass
class RunReport:
    instance: str
    algo: str
    cost: Fraction
    bounds: dict  # name -> Fraction or None
    oracle: Optional[Fraction] = None
    ms: float = 0.0
    checks: dict = field(default_factory=dict)

    @property
    def best_bound(self) -> Optional[Fraction]:
        vals = [v for v in self.bounds.values() if v is not None]
        if self.oracle is not None:
            vals.append(self.oracle)
        return max(vals) if vals else None

    @property
    def ratio(self) -> Optional[Fraction]:
        b = self.best_bound
        if not b:
            return None
        return Fraction(self.cost) / b

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "algo": self.algo,
            "cost": _num(self.cost),
            "bounds": {k: _num(v) for k, v in self.bounds.items()},
            "oracle": _num(self.oracle),
            "ratio": None if self.ratio is None else f"{float(self.ratio):.6f}",
            "ms": round(self.ms, 3),
            "checks": self.checks,
        }


# ---------------------------------------------------------------------------
# solving


def _oracle_budget(**kw) -> oracle.OracleBudget:
    budget = oracle.OracleBudget.from_env(**kw)
    if budget.wall_ms is None:
        budget = oracle.OracleBudget(budget.jobs, budget.slots, budget.starts, DEFAULT_ORACLE_MS)
    return budget


def _active_oracle(inst: ActiveInstance) -> Optional[Fraction]:
    try:
        return Fraction(oracle.opt_active(inst, _oracle_budget(jobs=8)))
    except oracle.BudgetExceeded:
        return None


def _busy_oracle(jobs, g) -> Optional[Fraction]:
    if g is None:
        return None
    try:
        return oracle.opt_busy(jobs, g, _oracle_budget(jobs=8))
    except oracle.BudgetExceeded:
        return None


def active_bounds(inst: ActiveInstance, lp_objective=None) -> dict:
    total = inst.total_length
    if lp_objective is None:
        lp_objective = active.solve_active_lp(inst).objective
    return {
        "mass": Fraction(-(-total // inst.g)),
        "span": Fraction(max((int(j.length) for j in inst.jobs), default=0)),
        "lp": lp_objective,
    }


def busy_bounds(jobs, g, preemptive: bool = False) -> dict:
    jobs = list(jobs)
    if preemptive:
        return {
            "mass": mass(jobs) / g if g else Fraction(0),
            "span": oracle.measure_cover_lp(jobs),
            "profile": None,
        }
    lb = lower_bounds(jobs, g)
    return {"mass": lb.mass, "span": lb.span, "profile": lb.profile}


def run_algorithm(inst, algo: str, seed: Optional[int] = None, name: str = "",
                  with_oracle: bool = True, order: Optional[str] = None):
    """Run ``algo`` on ``inst``; returns (schedule document, report, schedule object)."""
    t0 = time.perf_counter()
    if algo in ACTIVE_ALGOS:
        if not isinstance(inst, ActiveInstance):
            raise InputError(f"algorithm {algo} needs an active-time instance")
        if algo == "minimal":
            if order is None:
                order = "random" if seed is not None else "latest"
            if order not in ("latest", "earliest", "random"):
                order = [int(t) for t in order.split(",") if t]
            sched = active.minimal_feasible(inst, order, seed)
            ms = (time.perf_counter() - t0) * 1000
            doc = sched.to_json()
            checks = {
                "assignment_valid": not validate_assignment(inst, sched.active_slots, sched.assignment),
                "minimal": active.is_minimal(inst, sched.active_slots),
            }
            bounds = active_bounds(inst)
        else:
            res = active.lp_round(inst)
            ms = (time.perf_counter() - t0) * 1000
            sched = res.schedule
            doc = sched.to_json()
            doc["trace"] = res.state.trace
            doc["ledger"] = [r.to_json() for r in res.state.ledger]
            checks = {
                "assignment_valid": not validate_assignment(inst, sched.active_slots, sched.assignment),
                "ledger_sound": not active.ledger_problems(res.state),
                "iteration_invariants": all(r.get("feasible") and r.get("within_budget") for r in res.state.trace),
                "within_twice_lp": sched.cost <= 2 * res.lp.objective,
            }
            bounds = active_bounds(inst, res.lp.objective)
        doc.update({"algo": algo, "g": inst.g})
        orc = _active_oracle(inst) if with_oracle else None
        report = RunReport(name, algo, Fraction(sched.cost), bounds, orc, ms, checks)
        return doc, report, sched

    if algo not in BUSY_ALGOS and algo != "firstfit":
        raise InputError(f"unknown algorithm {algo!r}")
    if not isinstance(inst, BusyInstance):
        raise InputError(f"algorithm {algo} needs a busy-time instance")
    jobs = list(inst.jobs)
    g = inst.g
    rng = random.Random(seed) if seed is not None else None
    if algo in ("tracking", "busy3", "preempt-g", "firstfit") and g is None:
        raise InputError(f"algorithm {algo} needs a finite g (use --g)")
    if algo == "tracking":
        if not inst.all_interval:
            raise InputError("tracking needs interval jobs; use busy3 for flexible jobs")
        sched = busy.greedy_tracking(jobs, g, rng)
    elif algo == "busy3":
        sched = busy.busy_three_approx(jobs, g, rng)
    elif algo == "firstfit":
        conv = busy.convert_to_interval_unbounded(jobs)
        ff = busy.first_fit(conv.instance, g)
        sched = busy.BundleSchedule(ff.bundles, dict(conv.start_times), g)
    elif algo == "preempt-inf":
        _, sched = busy.preemptive_unbounded(jobs)
    else:
        sched = busy.preemptive_bounded(jobs, g)
    ms = (time.perf_counter() - t0) * 1000
    doc = sched.to_json()
    doc.update({"algo": algo, "g": "inf" if g is None or algo == "preempt-inf" else g})
    if isinstance(sched, busy.PreemptiveSchedule):
        cap = None if algo == "preempt-inf" else g
        checks = {"schedule_valid": not busy.preemptive_problems(jobs, sched, cap)}
        bounds = busy_bounds(jobs, cap, preemptive=True)
        if algo == "preempt-inf":
            checks["matches_measure_cover"] = sched.cost == bounds["span"]
        else:
            checks["within_opt_inf_plus_mass"] = sched.cost <= bounds["span"] + bounds["mass"]
        orc = None
    else:
        checks = {"schedule_valid": not busy.bundle_problems(jobs, sched, g)}
        if algo == "tracking" and sched.bundles:
            span_all = sum((b.span for b in sched.bundles[:1]), Fraction(0))
            rest = sum((b.span for b in sched.bundles[1:]), Fraction(0))
            checks["structural_bound"] = bool(span_all <= lower_bounds(jobs, g).span and rest <= 2 * mass(jobs) / g)
        bounds = busy_bounds(jobs, g)
        orc = _busy_oracle(jobs, g) if with_oracle else None
    report = RunReport(name, algo, sched.cost, bounds, orc, ms, checks)
    return doc, report, sched


def _svg_for(sched, title: str) -> str:
    if isinstance(sched, active.ActiveSchedule):
        rows = gantt.active_rows(sched)
    elif isinstance(sched, busy.PreemptiveSchedule):
        rows = gantt.preemptive_rows(sched)
    else:
        rows = gantt.bundle_rows(sched)
    return gantt.render(rows, title)


def _load(path: str, g_override: Optional[int] = None):
    inst = instances.read(path)
    if g_override is not None:
        if isinstance(inst, ActiveInstance):
            inst = ActiveInstance(inst.jobs, g_override)
        else:
            inst = BusyInstance(inst.jobs, g_override)
    return inst


def cmd_solve(args) -> int:
    inst = _load(args.inp, args.g)
    if isinstance(inst, ActiveInstance) and not check_feasibility(inst, inst.slots).feasible:
        print("instance is infeasible even with every slot active", file=sys.stderr)
        return EXIT_INFEASIBLE
    doc, report, sched = run_algorithm(inst, args.algo, args.seed, name=args.inp,
                                       with_oracle=not args.no_oracle, order=args.order)
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    rep = json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(rep)
    else:
        sys.stderr.write(rep)
    if args.svg:
        Path(args.svg).write_text(_svg_for(sched, f"{args.algo} on {args.inp}"))
    return 0


def cmd_bound(args) -> int:
    inst = _load(args.inp, args.g)
    if isinstance(inst, ActiveInstance):
        if not check_feasibility(inst, inst.slots).feasible:
            print("instance is infeasible even with every slot active", file=sys.stderr)
            return EXIT_INFEASIBLE
        bounds = active_bounds(inst)
        orc = None if args.no_oracle else _active_oracle(inst)
    else:
        bounds = busy_bounds(inst.jobs, inst.g)
        orc = None if args.no_oracle else _busy_oracle(inst.jobs, inst.g)
        bounds["preemptive"] = oracle.preemptive_lower_bounds(inst.jobs, inst.g) if inst.g else \
            oracle.measure_cover_lp(inst.jobs)
    best = max(v for v in bounds.values() if v is not None) if bounds else Fraction(0)
    out = {k: _num(v) for k, v in bounds.items()}
    out["best"] = _num(best)
    out["oracle"] = _num(orc)
    print(json.dumps(out, sort_keys=True, indent=2))
    return 0


# ---------------------------------------------------------------------------
# verification


def _frac(v) -> Fraction:
    try:
        return to_fraction(v)
    except (TypeError, ValueError, ZeroDivisionError):
        raise InputError(f"bad time value {v!r} in schedule") from None


def verify_schedule(inst, doc: dict) -> list[str]:
    """Every violated invariant of ``doc`` against ``inst`` (empty when valid)."""
    kind = doc.get("kind")
    if kind == "active":
        if not isinstance(inst, ActiveInstance):
            return ["active schedule given for a busy-time instance"]
        slots = {int(t) for t in doc.get("active_slots", [])}
        bad = [t for t in slots if not 1 <= t <= inst.T]
        if bad:
            return [f"active slots {sorted(bad)} outside 1..{inst.T}"]
        assignment = {j: frozenset(int(t) for t in s) for j, s in doc.get("assignment", {}).items()}
        problems = validate_assignment(inst, slots, assignment)
        problems += _verify_trace(inst, doc.get("trace"))
        return problems
    if not isinstance(inst, BusyInstance):
        return [f"{kind} schedule given for an active-time instance"]
    g = doc.get("g", inst.g)
    g = None if g == "inf" else int(g)
    jobs = list(inst.jobs)
    by_id = {j.id: j for j in jobs}
    if kind == "bundles":
        bundles = []
        starts = {}
        for m in doc.get("machines", []):
            placed = []
            for entry in m:
                j = by_id.get(entry.get("id"))
                if j is None:
                    return [f"unknown job {entry.get('id')!r} in schedule"]
                s = _frac(entry["start"])
                placed.append(Job(j.id, s, s + j.length, j.length))
                starts[j.id] = s
            bundles.append(busy.Bundle(tuple(placed)))
        sched = busy.BundleSchedule(tuple(bundles), starts, g)
        return busy.bundle_problems(jobs, sched, g)
    if kind == "preemptive":
        pieces = {}
        for jid, plist in doc.get("pieces", {}).items():
            out = []
            for p in plist:
                a, b = _frac(p["start"]), _frac(p["end"])
                if not a < b:
                    return [f"job {jid} has an empty or reversed piece"]
                out.append((p.get("machine", 0), TimeInterval(a, b)))
            pieces[jid] = tuple(out)
        return busy.preemptive_problems(jobs, busy.PreemptiveSchedule(pieces), g)
    return [f"unknown schedule kind {kind!r}"]


def _verify_trace(inst: ActiveInstance, trace) -> list[str]:
    """Recheck the per-iteration rounding invariants recorded in a trace."""
    if not trace:
        return []
    out = []
    opened: set = set()
    seen_mass = Fraction(0)
    for rec in trace:
        opened |= set(rec.get("opened", []))
        seen_mass += to_fraction(rec["Y"])
        d = rec["deadline"]
        due = [j for j in inst.jobs if j.deadline <= d]
        if not check_feasibility(inst, opened, due).feasible:
            out.append(f"rounding iteration {rec['iteration']}: jobs due by {d} do not fit the opened slots")
        if len(opened) > 2 * seen_mass:
            out.append(f"rounding iteration {rec['iteration']}: {len(opened)} slots exceed twice the LP mass {seen_mass}")
    return out


def cmd_verify(args) -> int:
    inst = _load(args.inp)
    try:
        doc = json.loads(Path(args.schedule).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {args.schedule}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"schedule is not valid JSON (line {exc.lineno}): {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError("schedule must be a JSON object")
    try:
        problems = verify_schedule(inst, doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed schedule: {exc}") from None
    if problems:
        for p in problems:
            print(f"violation: {p}", file=sys.stderr)
        return EXIT_VIOLATION
    print("ok")
    return 0


# ---------------------------------------------------------------------------
# generation and benchmarks


def parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"parameter {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        low = v.lower()
        if low in ("true", "false"):
            out[k] = low == "true"
        elif low == "inf":
            out[k] = None
        else:
            try:
                out[k] = int(v)
            except ValueError:
                try:
                    out[k] = Fraction(v)
                except ValueError:
                    raise InputError(f"cannot parse value of {k}: {v!r}") from None
    return out


def cmd_gen(args) -> int:
    try:
        fx = instances.generate(args.kind, **parse_params(args.params))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    text = instances.dumps(fx.instance)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.meta:
        meta = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in fx.metadata.items()}
        Path(args.meta).write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return 0


def bench_suite(name: str) -> list:
    """(instance id, instance, fixture metadata) triples of a named suite."""
    if name == "named":
        fixtures = [
            ("integrality_gap_g2", instances.integrality_gap(2)),
            ("tight_minimal_g4", instances.tight_minimal(4)),
            ("tracking_gadget_g2", instances.tracking_gadget(2, Fraction(1, 10))),
        ]
        return [(iid, fx.instance, fx.metadata) for iid, fx in fixtures]
    if name == "random":
        out = []
        for s in range(10):
            out.append((f"active_{s:02d}", instances.random_active(5, 10, 2, s).instance, {}))
        for s in range(10):
            out.append((f"busy_{s:02d}", instances.random_busy(6, 2, s, integer_only=True, horizon=12).instance, {}))
        for s in range(5):
            out.append((f"interval_{s:02d}", instances.random_busy(8, 3, s, interval_only=True, horizon=12).instance, {}))
        return out
    if name == "smoke":
        return [
            ("clique_4_2", instances.clique(4, 2).instance, {}),
            ("active_small", instances.random_active(3, 5, 2, 0).instance, {}),
        ]
    raise InputError(f"unknown suite {name!r}; choose named, random or smoke")


def bench_algos(inst) -> list:
    if isinstance(inst, ActiveInstance):
        return ["lpround", "minimal"]
    algos = ["busy3", "firstfit", "preempt-g", "preempt-inf"]
    if inst.all_interval:
        algos.insert(0, "tracking")
    return sorted(algos)


def run_bench(suite: str, out_dir: Path, svg: bool = False) -> list[dict]:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for iid, inst, meta in sorted(bench_suite(suite), key=lambda p: p[0]):
        kind = "active" if isinstance(inst, ActiveInstance) else "busy"
        runs = [(algo, algo, None) for algo in bench_algos(inst)]
        if "adversarial_order" in meta:
            order = ",".join(str(t) for t in meta["adversarial_order"])
            runs.append(("minimal-adversarial", "minimal", order))
        for label, algo, order in sorted(runs):
            _, rep, sched = run_algorithm(inst, algo, name=iid, order=order)
            rep.algo = label
            rows.append({
                "instance": iid,
                "kind": kind,
                "n": len(inst.jobs),
                "g": "inf" if inst.g is None else inst.g,
                "algo": label,
                "cost": _num(rep.cost),
                "mass": _num(rep.bounds.get("mass")),
                "span": _num(rep.bounds.get("span")),
                "profile": _num(rep.bounds.get("profile", rep.bounds.get("lp"))),
                "oracle": _num(rep.oracle),
                "ratio": "" if rep.ratio is None else f"{float(rep.ratio):.4f}",
                "ms": f"{rep.ms:.1f}",
            })
            if svg:
                (out_dir / f"{iid}_{label}.svg").write_text(_svg_for(sched, f"{label} on {iid}"))
    with open(out_dir / f"{suite}.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if v is None else v) for k, v in r.items()})
    return rows


def cmd_bench(args) -> int:
    rows = run_bench(args.suite, Path(args.out), args.svg)
    print(f"wrote {len(rows)} rows to {Path(args.out) / (args.suite + '.csv')}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chronoshed", description="Active-time and busy-time scheduling algorithms.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="run one algorithm on an instance")
    s.add_argument("--algo", required=True, choices=ACTIVE_ALGOS + BUSY_ALGOS)
    s.add_argument("--in", dest="inp", required=True, help="instance JSON")
    s.add_argument("--g", type=int, help="override the instance capacity")
    s.add_argument("--seed", type=int, help="seed for random close order or tie breaking")
    s.add_argument("--order", help="close order for minimal: latest, earliest, random or slot list 5,8")
    s.add_argument("--svg", help="write a Gantt chart here")
    s.add_argument("--out", help="schedule JSON (default stdout)")
    s.add_argument("--report", help="run report JSON (default stderr)")
    s.add_argument("--no-oracle", action="store_true", help="skip the exact oracle")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bound", help="lower bounds for an instance")
    b.add_argument("--in", dest="inp", required=True)
    b.add_argument("--g", type=int)
    b.add_argument("--no-oracle", action="store_true")
    b.set_defaults(func=cmd_bound)

    v = sub.add_parser("verify", help="check a schedule against its instance")
    v.add_argument("--in", dest="inp", required=True)
    v.add_argument("--schedule", required=True)
    v.set_defaults(func=cmd_verify)

    gnr = sub.add_parser("gen", help="generate a named or random instance")
    gnr.add_argument("--kind", required=True, choices=instances.KINDS)
    gnr.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE")
    gnr.add_argument("--out", help="instance JSON (default stdout)")
    gnr.add_argument("--meta", help="write the fixture metadata here")
    gnr.set_defaults(func=cmd_gen)

    bn = sub.add_parser("bench", help="run a suite and write a CSV table")
    bn.add_argument("--suite", required=True)
    bn.add_argument("--out", required=True, help="output directory")
    bn.add_argument("--svg", action="store_true", help="also write Gantt charts")
    bn.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (instances.SchemaError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except active.InfeasibleInstance as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except active.RoundingError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
