"""Named instance families, seeded random instances and JSON (de)serialization.

Document layout::

    {"kind": "active" | "busy", "g": int | "inf",
     "jobs": [{"id": str, "r": [num, den], "d": [num, den], "p": [num, den]}]}

Plain numbers are accepted for r, d and p.  The canonical writer sorts keys
and writes every time as a lowest-terms [num, den] pair.

Random generators use ``random.Random(seed)`` (Mersenne Twister), so a seed
fixes the instance across platforms and Python versions.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional, Union

from .core import ActiveInstance, BusyInstance, Job, to_fraction
from .maxflow import check_feasibility

Instance = Union[ActiveInstance, BusyInstance]


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FixtureKind:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class Fixture:
    kind: FixtureKind
    instance: Instance
    metadata: dict


KINDS = ("tight_minimal", "integrality_gap", "tracking_gadget", "clique", "random_active", "random_busy")


def tight_minimal(g: int) -> Fixture:
    """Two length-g jobs plus g-2 rigid and 2(g-2) unit jobs around [g, 2g).

    Optimum opens [g, 2g).  Closing slots g+1 and 2g first pushes the unit
    jobs into the rigid jobs' slots, after which every remaining slot is
    needed and 3g-2 stay open.
    """
    if not isinstance(g, int) or g < 2:
        raise ValueError("tight_minimal needs an integer g >= 2")
    jobs = [Job("long0", 0, 2 * g, g), Job("long1", g, 3 * g, g)]
    jobs += [Job(f"rigid{i}", g + 1, 2 * g - 1, g - 2) for i in range(g - 2)]
    jobs += [Job(f"late{i}", g + 1, 2 * g, 1) for i in range(g - 2)]
    jobs += [Job(f"early{i}", g, 2 * g - 1, 1) for i in range(g - 2)]
    meta = {
        "optimum": g,
        "optimal_slots": list(range(g + 1, 2 * g + 1)),
        "adversarial_minimal": 3 * g - 2,
        "adversarial_order": [g + 1, 2 * g],
    }
    return Fixture(FixtureKind("tight_minimal", {"g": g}), ActiveInstance(jobs, g), meta)


def integrality_gap(g: int) -> Fixture:
    """g disjoint pairs of slots, each the only window of g+1 unit jobs."""
    if not isinstance(g, int) or g < 1:
        raise ValueError("integrality_gap needs an integer g >= 1")
    jobs = [Job(f"p{k}_{i}", 2 * k, 2 * k + 2, 1) for k in range(g) for i in range(g + 1)]
    meta = {"optimum": 2 * g, "lp_optimum": g + 1}
    return Fixture(FixtureKind("integrality_gap", {"g": g}), ActiveInstance(jobs, g), meta)


def tracking_gadget(g: int, eps) -> Fixture:
    """g disjoint gadgets plus 2g flexible jobs spanning all of them.

    Gadget k sits at offset 2k: g unit jobs on [2k, 2k+1) and g unit jobs on
    [2k+1-eps, 2k+2-eps), so the two groups overlap by eps.  The flexible
    jobs have length 1-eps/2 and window [0, 2g-eps).
    """
    eps = to_fraction(eps)
    if not isinstance(g, int) or g < 1:
        raise ValueError("tracking_gadget needs an integer g >= 1")
    if not 0 < eps < Fraction(1, 2):
        raise ValueError("tracking_gadget needs 0 < eps < 1/2")
    jobs = []
    for k in range(g):
        o = 2 * k
        jobs += [Job(f"a{k}_{i}", o, o + 1, 1) for i in range(g)]
        jobs += [Job(f"b{k}_{i}", o + 1 - eps, o + 2 - eps, 1) for i in range(g)]
    jobs += [Job(f"f{i}", 0, 2 * g - eps, 1 - eps / 2) for i in range(2 * g)]
    meta = {"optimum": 2 * g + 2 - eps, "layout": "gadget k at offset 2k; groups overlap by eps"}
    return Fixture(FixtureKind("tracking_gadget", {"g": g, "eps": eps}), BusyInstance(jobs, g), meta)


def clique(n: int, g: int) -> Fixture:
    """n identical unit interval jobs on [0, 1)."""
    if n < 1 or g < 1:
        raise ValueError("clique needs n >= 1 and g >= 1")
    jobs = [Job(f"c{i}", 0, 1, 1) for i in range(n)]
    meta = {"optimum": -(-n // g)}
    return Fixture(FixtureKind("clique", {"n": n, "g": g}), BusyInstance(jobs, g), meta)


def random_active(n: int, T: int, g: int, seed: int, retries: int = 100) -> Fixture:
    """Windows first, then p uniform in [1, window]; infeasible draws are redrawn."""
    if n < 1 or T < 1 or g < 1:
        raise ValueError("random_active needs n, T, g >= 1")
    rng = random.Random(seed)
    for attempt in range(retries):
        jobs = []
        for i in range(n):
            r = rng.randint(0, T - 1)
            d = rng.randint(r + 1, T)
            jobs.append(Job(f"j{i}", r, d, rng.randint(1, d - r)))
        inst = ActiveInstance(jobs, g)
        if check_feasibility(inst, inst.slots).feasible:
            meta = {"attempts": attempt + 1}
            return Fixture(FixtureKind("random_active", {"n": n, "T": T, "g": g, "seed": seed}), inst, meta)
    raise ValueError(f"no feasible draw in {retries} attempts")


def random_busy(n: int, g: Optional[int], seed: int, integer_only: bool = True,
                horizon: int = 20, interval_only: bool = False) -> Fixture:
    """Windows inside [0, horizon); rational data uses denominators up to 4."""
    if n < 1 or horizon < 1:
        raise ValueError("random_busy needs n >= 1 and horizon >= 1")
    rng = random.Random(seed)
    jobs = []
    for i in range(n):
        q = 1 if integer_only else rng.choice((1, 2, 3, 4))
        r = rng.randint(0, horizon * q - 1)
        d = rng.randint(r + 1, horizon * q)
        p = d - r if interval_only else rng.randint(1, d - r)
        jobs.append(Job(f"j{i}", Fraction(r, q), Fraction(d, q), Fraction(p, q)))
    params = {"n": n, "g": g, "seed": seed, "integer_only": integer_only,
              "horizon": horizon, "interval_only": interval_only}
    return Fixture(FixtureKind("random_busy", params), BusyInstance(jobs, g), {})


_GENERATORS = {
    "tight_minimal": tight_minimal,
    "integrality_gap": integrality_gap,
    "tracking_gadget": tracking_gadget,
    "clique": clique,
    "random_active": random_active,
    "random_busy": random_busy,
}


def generate(kind: Union[FixtureKind, str], **params) -> Fixture:
    if isinstance(kind, FixtureKind):
        params = {**kind.params, **params}
        kind = kind.name
    if kind not in _GENERATORS:
        raise ValueError(f"unknown fixture kind {kind!r}; choose from {', '.join(KINDS)}")
    try:
        return _GENERATORS[kind](**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind}: {exc}") from None


# ---------------------------------------------------------------------------
# JSON


def _pair(x: Fraction) -> list:
    return [x.numerator, x.denominator]


def to_document(inst: Instance) -> dict:
    kind = "active" if isinstance(inst, ActiveInstance) else "busy"
    g = "inf" if inst.g is None else inst.g
    jobs = [{"id": j.id, "r": _pair(j.release), "d": _pair(j.deadline), "p": _pair(j.length)}
            for j in inst.jobs]
    return {"kind": kind, "g": g, "jobs": jobs}


def dumps(inst: Instance) -> str:
    return json.dumps(to_document(inst), sort_keys=True, indent=2) + "\n"


def canonicalize(text: str) -> str:
    return dumps(loads(text))


def _field(job: dict, idx: int, name: str) -> Fraction:
    jid = job.get("id", f"#{idx}")
    if name not in job:
        raise SchemaError(f"job {jid}: missing field {name!r}")
    v = job[name]
    if isinstance(v, bool) or not (isinstance(v, int) or
                                  (isinstance(v, list) and len(v) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in v))):
        raise SchemaError(f"job {jid}: field {name!r} must be an integer or a [num, den] pair, got {v!r}")
    if isinstance(v, list) and v[1] == 0:
        raise SchemaError(f"job {jid}: field {name!r} has a zero denominator")
    return to_fraction(v)


def from_document(doc) -> Instance:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    for key in ("kind", "g", "jobs"):
        if key not in doc:
            raise SchemaError(f"missing top-level field {key!r}")
    kind = doc["kind"]
    if kind not in ("active", "busy"):
        raise SchemaError(f"field 'kind' must be 'active' or 'busy', got {kind!r}")
    g = doc["g"]
    if g == "inf":
        if kind == "active":
            raise SchemaError("field 'g': active instances need a finite capacity")
        g = None
    elif isinstance(g, bool) or not isinstance(g, int) or g < 1:
        raise SchemaError(f"field 'g' must be a positive integer or 'inf', got {g!r}")
    if not isinstance(doc["jobs"], list):
        raise SchemaError("field 'jobs' must be a list")
    jobs = []
    seen = set()
    for idx, raw in enumerate(doc["jobs"]):
        if not isinstance(raw, dict):
            raise SchemaError(f"jobs[{idx}] must be an object")
        jid = raw.get("id")
        if not isinstance(jid, str):
            raise SchemaError(f"jobs[{idx}]: field 'id' must be a string")
        if jid in seen:
            raise SchemaError(f"job {jid}: duplicate id")
        seen.add(jid)
        r, d, p = (_field(raw, idx, name) for name in ("r", "d", "p"))
        if not r < d:
            raise SchemaError(f"job {jid}: field 'r' must be below field 'd'")
        if p <= 0:
            raise SchemaError(f"job {jid}: field 'p' must be positive")
        if p > d - r:
            raise SchemaError(f"job {jid}: field 'p' exceeds the window d - r")
        if kind == "active" and any(x.denominator != 1 for x in (r, d, p)):
            raise SchemaError(f"job {jid}: active instances need integral r, d, p")
        jobs.append(Job(jid, r, d, p))
    if kind == "active":
        return ActiveInstance(jobs, g)
    return BusyInstance(jobs, g)


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_document(doc)


def read(src) -> Instance:
    """Read an instance from a path or a text stream."""
    if isinstance(src, (str, Path)):
        try:
            text = Path(src).read_text()
        except OSError as exc:
            raise SchemaError(f"cannot read {src}: {exc.strerror}") from None
    else:
        text = src.read()
    return loads(text)


def write(inst: Instance, dst) -> None:
    text = dumps(inst)
    if isinstance(dst, (str, Path)):
        Path(dst).write_text(text)
    else:
        dst.write(text)
