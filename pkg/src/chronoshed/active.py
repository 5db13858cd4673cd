"""Active-time algorithms on a single slotted machine of capacity g.

Two algorithms live here:

* ``minimal_feasible`` closes slots one at a time while the instance stays
  feasible.  Any order gives a 3-approximation.
* ``lp_round`` solves the LP relaxation, pushes open mass to the right inside
  each deadline block and rounds deadline by deadline.  A barely open slot
  that cannot be closed is paid for by an earlier slot (dependent, trio or
  filler); one that can be closed leaves a proxy behind for later blocks.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from . import lpsolve
from .core import ActiveInstance, to_fraction
from .maxflow import check_feasibility, validate_assignment

HALF = Fraction(1, 2)


class InfeasibleInstance(ValueError):
    """No schedule exists even with every slot active."""


class RoundingError(RuntimeError):
    """An internal step failed that the analysis says cannot fail."""


class GuaranteeViolation(RoundingError):
    """A barely open slot had to open but no slot could pay for it."""


class InvariantViolation(RoundingError):
    """Feasibility or the 2x budget failed after a rounding iteration."""

    def __init__(self, message: str, trace: list):
        super().__init__(message)
        self.trace = trace


# ---------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class ActiveSchedule:
    active_slots: frozenset
    assignment: dict  # job id -> frozenset of slots
    g: int

    @property
    def cost(self) -> int:
        return len(self.active_slots)

    def load(self) -> dict:
        units = {t: 0 for t in self.active_slots}
        for slots in self.assignment.values():
            for t in slots:
                units[t] = units.get(t, 0) + 1
        return units

    @property
    def full_slots(self) -> frozenset:
        return frozenset(t for t, u in self.load().items() if u == self.g and t in self.active_slots)

    @property
    def non_full_slots(self) -> frozenset:
        return self.active_slots - self.full_slots

    def to_json(self) -> dict:
        return {
            "kind": "active",
            "active_slots": sorted(self.active_slots),
            "assignment": {j: sorted(s) for j, s in sorted(self.assignment.items())},
        }


def schedule_from_slots(inst: ActiveInstance, slots: Iterable[int]) -> ActiveSchedule:
    slots = frozenset(slots)
    res = check_feasibility(inst, slots)
    if not res.feasible:
        raise InfeasibleInstance("jobs do not fit in the given slots")
    sched = ActiveSchedule(slots, res.assignment, inst.g)
    problems = validate_assignment(inst, slots, sched.assignment)
    if problems:
        raise RoundingError("flow produced an invalid assignment: " + "; ".join(problems))
    return sched


# ---------------------------------------------------------------------------
# minimal feasible solutions


def close_order(inst: ActiveInstance, order: Union[str, Sequence[int]] = "latest",
                seed: Optional[int] = None) -> list[int]:
    """Slot sequence in which ``minimal_feasible`` tries to close slots.

    ``order`` is ``"latest"``, ``"earliest"``, ``"random"`` (seeded) or an
    explicit slot list; slots missing from an explicit list are tried
    afterwards, latest first.
    """
    slots = list(inst.slots)
    if order == "latest":
        return slots[::-1]
    if order == "earliest":
        return slots
    if order == "random":
        random.Random(seed).shuffle(slots)
        return slots
    if isinstance(order, str):
        raise ValueError(f"unknown close order {order!r}")
    head = [int(t) for t in order]
    bad = [t for t in head if t not in inst.slots]
    if bad or len(set(head)) != len(head):
        raise ValueError(f"explicit order has repeated or unknown slots: {head}")
    rest = [t for t in slots[::-1] if t not in set(head)]
    return head + rest


def minimal_feasible(inst: ActiveInstance, order: Union[str, Sequence[int]] = "latest",
                     seed: Optional[int] = None) -> ActiveSchedule:
    """Close slots in ``order`` whenever the rest stays feasible.

    One pass is enough for minimality: feasibility only gets harder as slots
    close, so a slot that was needed earlier is still needed at the end.
    """
    active = set(inst.slots)
    if not check_feasibility(inst, active).feasible:
        raise InfeasibleInstance("instance is infeasible even with all slots active")
    for t in close_order(inst, order, seed):
        active.discard(t)
        if not check_feasibility(inst, active).feasible:
            active.add(t)
    return schedule_from_slots(inst, active)


def is_minimal(inst: ActiveInstance, slots: Iterable[int]) -> bool:
    slots = set(slots)
    if not check_feasibility(inst, slots).feasible:
        return False
    return all(not check_feasibility(inst, slots - {t}).feasible for t in slots)


# ---------------------------------------------------------------------------
# LP relaxation


@dataclass
class FractionalSolution:
    y: dict  # slot -> openness in [0, 1]
    x: dict  # (slot, job id) -> units, zero entries omitted
    objective: Fraction


def _y_index(t: int) -> int:
    return t - 1


def _x_index(inst: ActiveInstance, t: int, k: int) -> int:
    return inst.T + (t - 1) * len(inst.jobs) + k


def build_active_lp(inst: ActiveInstance) -> lpsolve.LinearProgram:
    """LP relaxation: T openness variables then T*n assignment variables.

    Assignment variables outside a job's window are fixed to zero through
    their bounds.
    """
    T, n, g = inst.T, len(inst.jobs), inst.g
    bounds = [(0, 1)] * T
    for t in inst.slots:
        for job in inst.jobs:
            bounds.append((0, None) if t in job.slots() else (0, 0))
    lp = lpsolve.LinearProgram(T + T * n, [1] * T + [0] * (T * n), bounds=bounds)
    for t in inst.slots:
        for k in range(n):
            lp.add({_x_index(inst, t, k): 1, _y_index(t): -1}, lpsolve.LE, 0)
    for t in inst.slots:
        row = {_x_index(inst, t, k): 1 for k in range(n)}
        row[_y_index(t)] = -g
        lp.add(row, lpsolve.LE, 0)
    for k, job in enumerate(inst.jobs):
        lp.add({_x_index(inst, t, k): 1 for t in inst.slots}, lpsolve.GE, job.length)
    return lp


def _unpack(inst: ActiveInstance, values: list) -> tuple[dict, dict]:
    y = {t: values[_y_index(t)] for t in inst.slots}
    x = {}
    for t in inst.slots:
        for k, job in enumerate(inst.jobs):
            v = values[_x_index(inst, t, k)]
            if v:
                x[(t, job.id)] = v
    return y, x


def solve_active_lp(inst: ActiveInstance, exact: bool = True) -> FractionalSolution:
    sol = lpsolve.solve(build_active_lp(inst), exact=exact)
    if sol.status == "infeasible":
        raise InfeasibleInstance("LP relaxation is infeasible")
    if not sol.optimal:
        raise RoundingError(f"LP relaxation returned status {sol.status}")
    values = sol.values
    if not exact:
        # snap float output to nearby rationals so slot classes are decidable
        values = [Fraction(v).limit_denominator(10**6) for v in values]
    y, x = _unpack(inst, values)
    return FractionalSolution(y, x, sum(y.values(), Fraction(0)))


def lp_violations(inst: ActiveInstance, frac: FractionalSolution) -> list[str]:
    """Constraint violations of ``frac`` (empty when it is LP-feasible)."""
    out = []
    for t, v in frac.y.items():
        if not 0 <= v <= 1:
            out.append(f"y[{t}]={v} outside [0,1]")
    load: dict = {}
    got: dict = {}
    for (t, jid), v in frac.x.items():
        job = inst.job(jid)
        if v < 0:
            out.append(f"x[{t},{jid}] negative")
        if v and t not in job.slots():
            out.append(f"x[{t},{jid}] outside window")
        if v > frac.y.get(t, 0):
            out.append(f"x[{t},{jid}]={v} exceeds y[{t}]")
        load[t] = load.get(t, 0) + v
        got[jid] = got.get(jid, 0) + v
    for t, v in load.items():
        if v > inst.g * frac.y.get(t, 0):
            out.append(f"slot {t} load {v} exceeds g*y")
    for job in inst.jobs:
        if got.get(job.id, 0) < job.length:
            out.append(f"job {job.id} covered {got.get(job.id, 0)} < {job.length}")
    return out


# ---------------------------------------------------------------------------
# deadline blocks and right shifting


@dataclass(frozen=True)
class DeadlineBlock:
    index: int
    deadline: int
    first_slot: int
    mass: Fraction
    jobs: tuple

    @property
    def slots(self) -> range:
        return range(self.first_slot, self.deadline + 1)


def deadline_blocks(inst: ActiveInstance, y: dict) -> list[DeadlineBlock]:
    """Blocks between consecutive distinct deadlines; the first starts at slot 1."""
    deadlines = sorted({int(j.deadline) for j in inst.jobs})
    blocks = []
    prev = 0
    for i, d in enumerate(deadlines, start=1):
        m = sum((to_fraction(y.get(t, 0)) for t in range(prev + 1, d + 1)), Fraction(0))
        jobs = tuple(j for j in inst.jobs if j.deadline == d)
        blocks.append(DeadlineBlock(i, d, prev + 1, m, jobs))
        prev = d
    return blocks


def shifted_openness(inst: ActiveInstance, y: dict) -> dict:
    out = {t: Fraction(0) for t in inst.slots}
    for b in deadline_blocks(inst, y):
        whole = math.floor(b.mass)
        for t in range(b.deadline - whole + 1, b.deadline + 1):
            out[t] = Fraction(1)
        rest = b.mass - whole
        if rest:
            out[b.deadline - whole] = rest
    return out


def fractional_assignment(inst: ActiveInstance, y: dict, exact: bool = True) -> Optional[dict]:
    """Solve the assignment LP with openness fixed; None when infeasible."""
    n = len(inst.jobs)
    cols = [(t, k) for t in inst.slots for k, job in enumerate(inst.jobs)
            if t in job.slots() and y.get(t, 0) > 0]
    index = {c: i for i, c in enumerate(cols)}
    lp = lpsolve.LinearProgram(len(cols), [0] * len(cols),
                               bounds=[(0, y[t]) for t, _ in cols])
    for t in inst.slots:
        row = {index[(t, k)]: 1 for k in range(n) if (t, k) in index}
        if row:
            lp.add(row, lpsolve.LE, inst.g * y[t])
    for k, job in enumerate(inst.jobs):
        row = {index[(t, k)]: 1 for t in job.slots() if (t, k) in index}
        if not row:
            return None
        lp.add(row, lpsolve.GE, job.length)
    sol = lpsolve.solve(lp, exact=exact)
    if not sol.optimal:
        return None
    return {(t, inst.jobs[k].id): v for (t, k), v in zip(cols, sol.values) if v}


def right_shift(frac: FractionalSolution, inst: ActiveInstance, exact: bool = True) -> FractionalSolution:
    """Push each block's open mass against its deadline and recompute x."""
    y = shifted_openness(inst, frac.y)
    x = fractional_assignment(inst, y, exact=exact)
    if x is None:
        raise RoundingError("right-shifted openness admits no fractional assignment")
    return FractionalSolution(y, x, sum(y.values(), Fraction(0)))


class SlotClass(Enum):
    CLOSED = "closed"
    BARELY = "barely"
    HALF = "half"
    FULLY = "fully"


def classify_slot(y_value) -> SlotClass:
    y = to_fraction(y_value)
    if not 0 <= y <= 1:
        raise ValueError(f"openness {y} outside [0, 1]")
    if y == 1:
        return SlotClass.FULLY
    if y >= HALF:
        return SlotClass.HALF
    if y > 0:
        return SlotClass.BARELY
    return SlotClass.CLOSED


# ---------------------------------------------------------------------------
# rounding


@dataclass(frozen=True)
class Proxy:
    value: Fraction
    pointer: int


@dataclass(frozen=True)
class ChargeRecord:
    """One charging arrangement.

    ``slots[0]`` pays.  self: (half,), dependent: (fully, barely),
    trio: (fully, dependent, barely), filler: (half, barely).
    ``y`` lists the openness of each slot in the same order.
    """

    kind: str
    slots: tuple
    y: tuple

    def to_json(self) -> dict:
        return {"kind": self.kind, "slots": list(self.slots), "y": [str(v) for v in self.y]}


@dataclass
class RoundingState:
    opened: set = field(default_factory=set)
    proxy: Optional[Proxy] = None
    ledger: list = field(default_factory=list)
    fully: list = field(default_factory=list)  # slots fully open by the LP or a proxy merge
    half: dict = field(default_factory=dict)  # half-open slot -> its openness
    trace: list = field(default_factory=list)

    def record_for(self, slot: int, kind: Optional[str] = None) -> Optional[ChargeRecord]:
        for rec in self.ledger:
            if rec.slots[0] == slot and (kind is None or rec.kind == kind):
                return rec
        return None

    def trace_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.trace)


def _charge_barely(state: RoundingState, slot: int, y: Fraction) -> tuple[list, list]:
    """Find the earliest slot that can pay for opening ``slot``.

    Returns (added, removed) ledger records.
    """
    paid = {rec.slots[0]: rec for rec in state.ledger}
    for f in sorted(state.fully):
        if f not in paid:
            rec = ChargeRecord("dependent", (f, slot), (Fraction(1), y))
            state.ledger.append(rec)
            return [rec], []
    for f in sorted(state.fully):
        rec = paid[f]
        if rec.kind == "dependent" and rec.y[1] + y >= HALF:
            new = ChargeRecord("trio", (f, rec.slots[1], slot), (Fraction(1), rec.y[1], y))
            state.ledger[state.ledger.index(rec)] = new
            return [new], [rec]
    for h in sorted(state.half):
        rec = paid.get(h)
        if rec is not None and rec.kind == "self" and state.half[h] + y >= 1:
            new = ChargeRecord("filler", (h, slot), (state.half[h], y))
            state.ledger[state.ledger.index(rec)] = new
            return [new], [rec]
    raise GuaranteeViolation(f"no fully or half open slot can pay for barely open slot {slot} (y={y})")


def _feasible_prefix(inst: ActiveInstance, slots: Iterable[int], deadline: int) -> bool:
    jobs = [j for j in inst.jobs if j.deadline <= deadline]
    return check_feasibility(inst, slots, jobs).feasible


def round_active(shifted: FractionalSolution, inst: ActiveInstance,
                 check_invariants: bool = True) -> tuple[set, RoundingState]:
    """Round a right-shifted LP solution deadline by deadline.

    With ``check_invariants`` the two per-iteration invariants (feasibility
    of every job due so far on the slots opened so far, and at most twice the
    LP mass seen so far) are verified and a failure raises
    ``InvariantViolation``.
    """
    state = RoundingState()
    blocks = deadline_blocks(inst, shifted.y)
    seen_mass = Fraction(0)
    prev_deadline = 0
    for b in blocks:
        seen_mass += b.mass
        incoming = state.proxy
        merged = b.mass + (incoming.value if incoming else 0)
        whole = math.floor(merged)
        frac = merged - whole
        added: list = []
        removed: list = []
        opened_now = []
        for t in range(b.deadline - whole + 1, b.deadline + 1):
            if t in state.opened:
                raise RoundingError(f"slot {t} opened twice")
            state.opened.add(t)
            state.fully.append(t)
            opened_now.append(t)
        pos = b.deadline - whole
        if pos > prev_deadline:
            target = pos
        elif incoming is not None:
            target = incoming.pointer
        else:
            target = None
        state.proxy = None
        if frac == 0:
            case = "integral"
        else:
            if target is None or target in state.opened:
                raise RoundingError(f"no unopened slot for remainder {frac} at deadline {b.deadline}")
            if frac >= HALF:
                case = "half"
                state.opened.add(target)
                opened_now.append(target)
                state.half[target] = frac
                rec = ChargeRecord("self", (target,), (frac,))
                state.ledger.append(rec)
                added.append(rec)
            elif _feasible_prefix(inst, state.opened, b.deadline):
                case = "close"
                state.proxy = Proxy(frac, target)
            else:
                state.opened.add(target)
                opened_now.append(target)
                added, removed = _charge_barely(state, target, frac)
                case = added[0].kind
        record = {
            "iteration": b.index,
            "deadline": b.deadline,
            "Y": str(b.mass),
            "proxy_in": None if incoming is None else [str(incoming.value), incoming.pointer],
            "merged": str(merged),
            "case": case,
            "opened": sorted(opened_now),
            "proxy_out": None if state.proxy is None else [str(state.proxy.value), state.proxy.pointer],
            "ledger_added": [r.to_json() for r in added],
            "ledger_removed": [r.to_json() for r in removed],
        }
        if check_invariants:
            feasible = _feasible_prefix(inst, state.opened, b.deadline)
            within = len(state.opened) <= 2 * seen_mass
            record["feasible"] = feasible
            record["within_budget"] = within
            state.trace.append(record)
            if not feasible:
                raise InvariantViolation(f"jobs due by {b.deadline} do not fit after iteration {b.index}",
                                         state.trace)
            if not within:
                raise InvariantViolation(
                    f"{len(state.opened)} slots opened against LP mass {seen_mass} after iteration {b.index}",
                    state.trace)
        else:
            state.trace.append(record)
        prev_deadline = b.deadline
    return set(state.opened), state


def ledger_problems(state: RoundingState) -> list[str]:
    """Check the charging rules on a finished rounding state."""
    out = []
    seen_payers = set()
    charged_barely: dict = {}
    for rec in state.ledger:
        payer = rec.slots[0]
        if payer in seen_payers:
            out.append(f"slot {payer} pays twice")
        seen_payers.add(payer)
        if rec.kind in ("dependent", "trio") and payer not in state.fully:
            out.append(f"{rec.kind} record paid by non-fully-open slot {payer}")
        if rec.kind in ("self", "filler") and payer not in state.half:
            out.append(f"{rec.kind} record paid by non-half-open slot {payer}")
        if rec.kind == "self" and rec.y[0] < HALF:
            out.append(f"self charge on slot {payer} with y {rec.y[0]}")
        if rec.kind == "trio" and sum(rec.y) < Fraction(3, 2):
            out.append(f"trio {rec.slots} has y sum {sum(rec.y)} < 3/2")
        if rec.kind == "filler" and sum(rec.y) < 1:
            out.append(f"filler {rec.slots} has y sum {sum(rec.y)} < 1")
        for s in rec.slots[1:]:
            charged_barely[s] = charged_barely.get(s, 0) + 1
    barely = state.opened - set(state.fully) - set(state.half)
    for s in sorted(barely):
        if charged_barely.get(s, 0) != 1:
            out.append(f"opened barely open slot {s} appears in {charged_barely.get(s, 0)} records")
    for s, c in charged_barely.items():
        if s not in barely:
            out.append(f"slot {s} charged as barely open but is not")
    return out


@dataclass
class LpRoundResult:
    schedule: ActiveSchedule
    lp: FractionalSolution
    shifted: FractionalSolution
    state: RoundingState

    @property
    def lp_objective(self) -> Fraction:
        return self.lp.objective


def lp_round(inst: ActiveInstance, exact: bool = True, check_invariants: bool = True) -> LpRoundResult:
    """LP relaxation, right shift, rounding, then a flow assignment."""
    if not check_feasibility(inst, inst.slots).feasible:
        raise InfeasibleInstance("instance is infeasible even with all slots active")
    lp = solve_active_lp(inst, exact=exact)
    shifted = right_shift(lp, inst, exact=exact)
    opened, state = round_active(shifted, inst, check_invariants=check_invariants)
    schedule = schedule_from_slots(inst, opened)
    return LpRoundResult(schedule, lp, shifted, state)
