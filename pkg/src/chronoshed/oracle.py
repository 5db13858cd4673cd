"""Exhaustive exact solvers and lower bounds used as ground truth.

Nothing here calls the algorithms under test.  Feasibility of a slot set is
decided by a Hall-type counting condition (or by literal backtracking), not
by the flow network.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import lpsolve
from .core import ActiveInstance, Job, demand_profile, mass, to_fraction

BUDGET_ENV = "CHRONOSHED_ORACLE_BUDGET_MS"


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    jobs: int = 7
    slots: int = 14
    starts: int = 10**7  # cap on the product of start choices or search nodes
    wall_ms: Optional[int] = None

    @classmethod
    def from_env(cls, **kw) -> "OracleBudget":
        ms = os.environ.get(BUDGET_ENV)
        if ms:
            kw.setdefault("wall_ms", int(ms))
        return cls(**kw)


class _Clock:
    def __init__(self, budget: OracleBudget):
        self.deadline = None if budget.wall_ms is None else time.monotonic() + budget.wall_ms / 1000
        self.ticks = 0
        self.limit = budget.starts

    def tick(self) -> None:
        self.ticks += 1
        if self.ticks > self.limit:
            raise BudgetExceeded(f"search exceeded {self.limit} nodes")
        if self.deadline is not None and self.ticks % 512 == 0 and time.monotonic() > self.deadline:
            raise BudgetExceeded("oracle wall-clock budget exhausted")


# ---------------------------------------------------------------------------
# active time


def _hall_tables(inst: ActiveInstance):
    """For every job subset S: demand sum and per-slot min(g, |S live at t|)."""
    n, T, g = len(inst.jobs), inst.T, inst.g
    live = np.zeros((n, T), dtype=np.int64)
    for k, j in enumerate(inst.jobs):
        for t in j.slots():
            live[k, t - 1] = 1
    masks = np.arange(1 << n, dtype=np.int64)
    member = ((masks[:, None] >> np.arange(n)) & 1).astype(np.int64)  # subsets x jobs
    p = np.array([int(j.length) for j in inst.jobs], dtype=np.int64)
    demand = member @ p
    supply = np.minimum(member @ live, g)  # subsets x slots
    return demand, supply


def hall_feasible(inst: ActiveInstance, slots: Iterable[int]) -> bool:
    """Every job subset S needs sum p_j <= sum over open t of min(g, |S live at t|)."""
    demand, supply = _hall_tables(inst)
    open_vec = np.zeros(inst.T, dtype=np.int64)
    for t in slots:
        open_vec[t - 1] = 1
    return bool(np.all(supply @ open_vec >= demand))


def _check_active_budget(inst: ActiveInstance, budget: OracleBudget) -> None:
    if len(inst.jobs) > budget.jobs:
        raise BudgetExceeded(f"{len(inst.jobs)} jobs exceed the budget of {budget.jobs}")
    if inst.T > budget.slots:
        raise BudgetExceeded(f"{inst.T} slots exceed the budget of {budget.slots}")


def opt_active(inst: ActiveInstance, budget: Optional[OracleBudget] = None) -> int:
    """Fewest active slots, by enumerating slot sets in increasing size.

    Raises ``ValueError`` when even all slots are not enough.
    """
    budget = budget or OracleBudget.from_env()
    _check_active_budget(inst, budget)
    clock = _Clock(budget)
    T = inst.T
    if not inst.jobs:
        return 0
    demand, supply = _hall_tables(inst)
    if not np.all(supply.sum(axis=1) >= demand):
        raise ValueError("instance is infeasible")
    lower = max(int(j.length) for j in inst.jobs)
    for size in range(lower, T + 1):
        combos = np.array(list(itertools.combinations(range(T), size)), dtype=np.int64)
        for chunk in range(0, len(combos), 4096):
            clock.tick()
            part = combos[chunk:chunk + 4096]
            onehot = np.zeros((len(part), T), dtype=np.int64)
            np.put_along_axis(onehot, part, 1, axis=1)
            ok = np.all(supply @ onehot.T >= demand[:, None], axis=0)
            if ok.any():
                return size
    raise ValueError("instance is infeasible")


def window_components(inst: ActiveInstance) -> list[list[Job]]:
    """Groups of jobs whose windows chain together; groups share no slot."""
    jobs = sorted(inst.jobs, key=lambda j: (j.release, j.deadline))
    groups: list = []
    reach = None
    for j in jobs:
        if groups and j.release < reach:
            groups[-1].append(j)
            reach = max(reach, j.deadline)
        else:
            groups.append([j])
            reach = j.deadline
    return groups


def opt_active_by_components(inst: ActiveInstance, budget: Optional[OracleBudget] = None) -> int:
    """Exact optimum as the sum of optima of independent window groups."""
    total = 0
    for grp in window_components(inst):
        total += opt_active(ActiveInstance(grp, inst.g), budget)
    return total


def brute_force_feasible(inst: ActiveInstance, slots: Iterable[int]) -> bool:
    """Literal search: give each job p_j distinct open window slots with room left."""
    open_slots = sorted(set(slots))
    jobs = sorted(inst.jobs, key=lambda j: (j.deadline - j.release, j.id))
    if sum(int(j.length) for j in jobs) > inst.g * len(open_slots):
        return False
    options = []
    for j in jobs:
        win = [t for t in open_slots if j.release < t <= j.deadline]
        options.append((int(j.length), win))
    index = {t: i for i, t in enumerate(open_slots)}
    seen = set()

    def go(k: int, cap: tuple) -> bool:
        if k == len(options):
            return True
        key = (k, cap)
        if key in seen:
            return False
        p, win = options[k]
        free = [t for t in win if cap[index[t]] > 0]
        for pick in itertools.combinations(free, p):
            nxt = list(cap)
            for t in pick:
                nxt[index[t]] -= 1
            if go(k + 1, tuple(nxt)):
                return True
        seen.add(key)
        return False

    return go(0, tuple([inst.g] * len(open_slots)))


# ---------------------------------------------------------------------------
# busy time


def _scale(jobs: Sequence[Job]) -> int:
    dens = [x.denominator for j in jobs for x in (j.release, j.deadline, j.length)]
    return math.lcm(*dens) if dens else 1


def opt_busy(jobs: Sequence[Job], g: int, budget: Optional[OracleBudget] = None) -> Fraction:
    """Exact minimum busy time by branch and bound over (machine, start) choices.

    Rational data is scaled to integers.  With integral data some optimal
    schedule uses integral starts, so only those are tried for flexible jobs.
    """
    budget = budget or OracleBudget.from_env(jobs=8)
    jobs = list(jobs)
    if len(jobs) > budget.jobs:
        raise BudgetExceeded(f"{len(jobs)} jobs exceed the budget of {budget.jobs}")
    if not jobs:
        return Fraction(0)
    clock = _Clock(budget)
    scale = _scale(jobs)
    items = []
    for j in jobs:
        r, d, p = (int(x * scale) for x in (j.release, j.deadline, j.length))
        items.append((r, d, p))
    items.sort(key=lambda x: (x[1] - x[0] - x[2], x[0], -x[2]))
    total_mass = sum(p for _, _, p in items)
    lower = Fraction(total_mass, g)
    if all(j.is_interval for j in jobs):
        lower = max(lower, demand_profile(jobs, g).weighted_cost * scale)
    lower = max(lower, max(p for _, _, p in items))

    machines: list = []  # each: list of (start, end)
    best = [None]
    found_lower = [False]
    rem_after = [0] * (len(items) + 1)
    for k in range(len(items) - 1, -1, -1):
        rem_after[k] = rem_after[k + 1] + items[k][2]

    def span(ivs) -> int:
        total, cur_s, cur_e = 0, None, None
        for s, e in sorted(ivs):
            if cur_e is None or s > cur_e:
                if cur_e is not None:
                    total += cur_e - cur_s
                cur_s, cur_e = s, e
            else:
                cur_e = max(cur_e, e)
        if cur_e is not None:
            total += cur_e - cur_s
        return total

    def fits(ivs, s, e) -> bool:
        points = [s] + [a for a, _ in ivs if s < a < e]
        for x in points:
            if sum(1 for a, b in ivs if a <= x < b) >= g:
                return False
        return True

    spans: list = []
    masses: list = []

    def search(k: int, cost: int) -> None:
        clock.tick()
        if found_lower[0]:
            return
        free = sum(g * sp - ms for sp, ms in zip(spans, masses))
        bound = cost + max(0, Fraction(rem_after[k] - free, g))
        if best[0] is not None and bound >= best[0]:
            return
        if k == len(items):
            best[0] = cost
            if cost <= lower:
                found_lower[0] = True
            return
        r, d, p = items[k]
        options = []
        for m in range(len(machines) + 1):
            if m == len(machines):
                for s in range(r, d - p + 1):
                    options.append((p, m, s))
                continue
            ivs = machines[m]
            for s in range(r, d - p + 1):
                if fits(ivs, s, s + p):
                    options.append((span(ivs + [(s, s + p)]) - spans[m], m, s))
        options.sort()
        for delta, m, s in options:
            if m == len(machines):
                machines.append([(s, s + p)])
                spans.append(p)
                masses.append(p)
                search(k + 1, cost + delta)
                machines.pop()
                spans.pop()
                masses.pop()
            else:
                machines[m].append((s, s + p))
                spans[m] += delta
                masses[m] += p
                search(k + 1, cost + delta)
                machines[m].pop()
                spans[m] -= delta
                masses[m] -= p
            if found_lower[0]:
                return

    search(0, 0)
    return Fraction(best[0], scale)


def opt_convert_bruteforce(jobs: Sequence[Job], budget: Optional[OracleBudget] = None) -> Fraction:
    """Minimum measure of the union over integral start choices.

    Needs integral data.  Each partial placement is a bitmask of covered unit
    cells, so the union is exact and repeated states are skipped.
    """
    budget = budget or OracleBudget.from_env(jobs=8)
    jobs = list(jobs)
    if len(jobs) > budget.jobs:
        raise BudgetExceeded(f"{len(jobs)} jobs exceed the budget of {budget.jobs}")
    for j in jobs:
        if any(x.denominator != 1 for x in (j.release, j.deadline, j.length)):
            raise ValueError(f"job {j.id} has non-integral data")
    if not jobs:
        return Fraction(0)
    clock = _Clock(budget)
    base = int(min(j.release for j in jobs))
    opts = []
    for j in sorted(jobs, key=lambda j: j.deadline - j.release - j.length):
        r, d, p = int(j.release) - base, int(j.deadline) - base, int(j.length)
        block = (1 << p) - 1
        opts.append([block << s for s in range(r, d - p + 1)])
    best = [sum(int(j.length) for j in jobs)]
    seen = set()

    def go(k: int, covered: int) -> None:
        clock.tick()
        used = covered.bit_count()
        if used >= best[0]:
            return
        if k == len(opts):
            best[0] = used
            return
        if (k, covered) in seen:
            return
        seen.add((k, covered))
        for m in sorted(opts[k], key=lambda m: (covered | m).bit_count()):
            go(k + 1, covered | m)

    go(0, 0)
    return Fraction(best[0])


# ---------------------------------------------------------------------------
# preemptive bounds


def measure_cover_lp(jobs: Sequence[Job]) -> Fraction:
    """Least open measure such that every window contains p_j of it.

    One variable per elementary interval between consecutive release or
    deadline points, bounded by the interval's length.
    """
    jobs = list(jobs)
    if not jobs:
        return Fraction(0)
    points = sorted({x for j in jobs for x in (j.release, j.deadline)})
    elems = list(zip(points, points[1:]))
    lp = lpsolve.LinearProgram(len(elems), [1] * len(elems), bounds=[(0, b - a) for a, b in elems])
    for j in jobs:
        row = {i: 1 for i, (a, b) in enumerate(elems) if j.release <= a and b <= j.deadline}
        lp.add(row, lpsolve.GE, j.length)
    sol = lpsolve.solve(lp)
    if not sol.optimal:
        raise RuntimeError(f"measure-cover LP returned {sol.status}")
    return to_fraction(sol.objective)


def preemptive_lower_bounds(jobs: Sequence[Job], g: int) -> Fraction:
    jobs = list(jobs)
    if not jobs:
        return Fraction(0)
    return max(measure_cover_lp(jobs), mass(jobs) / g)
