"""Busy-time algorithms on machines that each run up to g jobs at once.

* ``longest_track`` and ``greedy_tracking`` bundle interval jobs.
* ``convert_to_interval_unbounded`` fixes start times of flexible jobs so the
  union of the jobs is as short as possible (the g = infinity optimum).
* ``busy_three_approx`` chains the two.
* ``preemptive_unbounded`` and ``preemptive_bounded`` handle jobs that may be
  split into pieces.
"""
from __future__ import annotations

import bisect
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Optional, Sequence

from .core import Job, TimeInterval, ceil_div, job_span, mass, merge_intervals, span_of, to_fraction


# ---------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Track:
    jobs: tuple  # interval jobs sorted by start, pairwise disjoint

    @property
    def length(self) -> Fraction:
        return mass(self.jobs)

    @property
    def span(self) -> Fraction:
        return job_span(self.jobs)

    def is_disjoint(self) -> bool:
        ordered = sorted(self.jobs, key=lambda j: j.release)
        return all(a.deadline <= b.release for a, b in zip(ordered, ordered[1:]))


@dataclass(frozen=True)
class Bundle:
    jobs: tuple  # interval jobs as placed
    tracks: tuple = ()

    @property
    def span(self) -> Fraction:
        return job_span(self.jobs)


@dataclass(frozen=True)
class BundleSchedule:
    bundles: tuple
    start_times: dict  # job id -> start
    g: Optional[int] = None

    @property
    def cost(self) -> Fraction:
        return sum((b.span for b in self.bundles), Fraction(0))

    def to_json(self) -> dict:
        return {
            "kind": "bundles",
            "machines": [
                [{"id": j.id, "start": _pair(j.release)} for j in sorted(b.jobs, key=lambda j: (j.release, j.id))]
                for b in self.bundles
            ],
        }


@dataclass(frozen=True)
class PreemptiveSchedule:
    pieces: dict  # job id -> tuple of (machine, TimeInterval)

    def machine_busy(self) -> dict:
        per: dict = {}
        for plist in self.pieces.values():
            for m, iv in plist:
                per.setdefault(m, []).append(iv)
        return {m: merge_intervals(ivs) for m, ivs in per.items()}

    @property
    def open_intervals(self) -> dict:
        return self.machine_busy()

    @property
    def cost(self) -> Fraction:
        return sum((span_of(ivs) for ivs in self.machine_busy().values()), Fraction(0))

    def to_json(self) -> dict:
        return {
            "kind": "preemptive",
            "pieces": {
                jid: [{"machine": m, "start": _pair(iv.start), "end": _pair(iv.end)} for m, iv in plist]
                for jid, plist in sorted(self.pieces.items())
            },
        }


def _pair(x: Fraction) -> list:
    x = to_fraction(x)
    return [x.numerator, x.denominator]


# ---------------------------------------------------------------------------
# validators


def max_overlap(intervals: Iterable[TimeInterval]) -> int:
    """Largest number of intervals covering a common point."""
    events = []
    for iv in intervals:
        events.append((iv.start, 1))
        events.append((iv.end, -1))
    events.sort(key=lambda e: (e[0], e[1]))  # ends before starts at equal times
    best = cur = 0
    for _, delta in events:
        cur += delta
        best = max(best, cur)
    return best


def bundle_problems(jobs: Sequence[Job], sched: BundleSchedule, g: Optional[int]) -> list[str]:
    """Violations of assignment, window and capacity rules (empty when valid)."""
    out = []
    by_id = {j.id: j for j in jobs}
    seen: dict = {}
    for k, b in enumerate(sched.bundles):
        for pj in b.jobs:
            seen[pj.id] = seen.get(pj.id, 0) + 1
            orig = by_id.get(pj.id)
            if orig is None:
                out.append(f"unknown job {pj.id} in machine {k}")
                continue
            if pj.length != orig.length:
                out.append(f"job {pj.id} has length {pj.length}, expected {orig.length}")
            if pj.release < orig.release or pj.deadline > orig.deadline:
                out.append(f"job {pj.id} placed at [{pj.release}, {pj.deadline}) outside its window")
            if sched.start_times.get(pj.id) != pj.release:
                out.append(f"job {pj.id} start time disagrees with its placement")
        if g is not None:
            peak = max_overlap(j.window() for j in b.jobs)
            if peak > g:
                out.append(f"machine {k} runs {peak} jobs at once, capacity {g}")
    for j in jobs:
        if seen.get(j.id, 0) != 1:
            out.append(f"job {j.id} appears on {seen.get(j.id, 0)} machines")
    return out


def preemptive_problems(jobs: Sequence[Job], sched: PreemptiveSchedule, g: Optional[int]) -> list[str]:
    out = []
    by_machine: dict = {}
    for j in jobs:
        plist = sched.pieces.get(j.id)
        if plist is None:
            out.append(f"job {j.id} is not scheduled")
            continue
        ivs = [iv for _, iv in plist]
        if sum((iv.length for iv in ivs), Fraction(0)) != j.length:
            out.append(f"job {j.id} receives {sum(iv.length for iv in ivs)} units, needs {j.length}")
        if max_overlap(ivs) > 1:
            out.append(f"job {j.id} runs twice at the same time")
        for m, iv in plist:
            if iv.start < j.release or iv.end > j.deadline:
                out.append(f"job {j.id} piece [{iv.start}, {iv.end}) outside its window")
            by_machine.setdefault(m, []).append(iv)
    extra = set(sched.pieces) - {j.id for j in jobs}
    if extra:
        out.append(f"unknown jobs: {sorted(extra)}")
    if g is not None:
        for m, ivs in sorted(by_machine.items(), key=lambda kv: str(kv[0])):
            peak = max_overlap(ivs)
            if peak > g:
                out.append(f"machine {m} runs {peak} jobs at once, capacity {g}")
    return out


# ---------------------------------------------------------------------------
# tracks and GreedyTracking


def longest_track(jobs: Sequence[Job], rng: Optional[random.Random] = None) -> Track:
    """Maximum-length set of pairwise disjoint interval jobs.

    Weighted interval scheduling over jobs sorted by end time.  On ties the
    later-ending job is left out, so the earlier-ending job is kept; with
    ``rng`` ties are broken at random instead.
    """
    for j in jobs:
        if not j.is_interval:
            raise ValueError(f"job {j.id} is not an interval job")
    order = sorted(jobs, key=lambda j: (j.deadline, j.release, j.id))
    ends = [j.deadline for j in order]
    best = [Fraction(0)] * (len(order) + 1)
    take = [False] * (len(order) + 1)
    prev = [0] * (len(order) + 1)
    for k, j in enumerate(order, start=1):
        prev[k] = bisect.bisect_right(ends, j.release, 0, k - 1)
        with_j = j.length + best[prev[k]]
        without = best[k - 1]
        if with_j > without:
            take[k] = True
        elif with_j == without and rng is not None:
            take[k] = rng.random() < 0.5
        best[k] = max(with_j, without)
    chosen = []
    k = len(order)
    while k > 0:
        if take[k]:
            chosen.append(order[k - 1])
            k = prev[k]
        else:
            k -= 1
    return Track(tuple(reversed(chosen)))


def greedy_tracking(jobs: Sequence[Job], g: int, rng: Optional[random.Random] = None) -> BundleSchedule:
    """Peel off longest tracks; tracks g(k-1)+1 .. gk form bundle k."""
    if g < 1:
        raise ValueError("g must be at least 1")
    left = list(jobs)
    tracks = []
    while left:
        tr = longest_track(left, rng)
        tracks.append(tr)
        ids = {j.id for j in tr.jobs}
        left = [j for j in left if j.id not in ids]
    bundles = []
    for k in range(0, len(tracks), g):
        group = tuple(tracks[k:k + g])
        bundles.append(Bundle(tuple(j for tr in group for j in tr.jobs), group))
    starts = {j.id: j.release for j in jobs}
    return BundleSchedule(tuple(bundles), starts, g)


def first_fit(jobs: Sequence[Job], g: int) -> BundleSchedule:
    """Baseline: longest job first, onto the first machine with room."""
    machines: list = []
    for j in sorted(jobs, key=lambda j: (-j.length, j.release, j.id)):
        if not j.is_interval:
            raise ValueError(f"job {j.id} is not an interval job")
        for m in machines:
            if max_overlap([x.window() for x in m] + [j.window()]) <= g:
                m.append(j)
                break
        else:
            machines.append([j])
    return BundleSchedule(tuple(Bundle(tuple(m)) for m in machines), {j.id: j.release for j in jobs}, g)


# ---------------------------------------------------------------------------
# flexible -> interval conversion (g = infinity)


@dataclass(frozen=True)
class Conversion:
    instance: tuple  # interval jobs [s_j, s_j + p_j)
    start_times: dict
    opt_infty: Fraction


def convert_to_interval_unbounded(jobs: Sequence[Job], rng: Optional[random.Random] = None) -> Conversion:
    """Start times minimising the measure of the union of all jobs.

    Some optimal union consists of disjoint blocks [c, e) where c is a latest
    start d_j - p_j and e is an earliest end r_j + p_j or some c + p_l.  Job j
    fits a block iff c <= d_j - p_j, e >= r_j + p_j and e - c >= p_j.  Blocks
    are chosen left to right; a job whose latest start falls before the end
    of the current block must be served by it.

    Without ``rng`` each job goes to the first block it fits, as early in it
    as its release allows.  With ``rng`` the block and the start inside it
    are drawn at random among the choices that keep the union optimal.
    """
    jobs = list(jobs)
    if not jobs:
        return Conversion((), {}, Fraction(0))
    latest = [j.latest_start for j in jobs]
    earliest_end = [j.earliest_end for j in jobs]
    lengths = [j.length for j in jobs]
    starts = sorted(set(latest))
    ends = sorted(set(earliest_end) | {c + p for c in starts for p in set(lengths)})

    def fits(k: int, c: Fraction, e: Fraction) -> bool:
        return c <= latest[k] and e >= earliest_end[k] and e - c >= lengths[k]

    @lru_cache(maxsize=None)
    def solve(pos: Fraction, pending: frozenset):
        if not pending:
            return Fraction(0), ()
        bound = min(latest[k] for k in pending)
        best = None
        for c in starts:
            if c < pos:
                continue
            if c > bound:
                break
            for e in ends[bisect.bisect_right(ends, c):]:
                served = frozenset(k for k in pending if fits(k, c, e))
                if not served:
                    continue
                rest = pending - served
                if any(latest[k] < e for k in rest):
                    continue
                sub = solve(e, rest)
                if sub is None:
                    continue
                cost = e - c + sub[0]
                if best is None or cost < best[0]:
                    best = (cost, ((c, e, served),) + sub[1])
        return best

    result = solve(Fraction(min(starts)), frozenset(range(len(jobs))))
    if result is None:
        raise RuntimeError("no block structure covers the jobs")
    cost, blocks = result
    start_times = {}
    for c, e, served in blocks:
        for k in served:
            start_times[jobs[k].id] = max(c, jobs[k].release)
    if rng is not None:
        for k, j in enumerate(jobs):
            homes = [(c, e) for c, e, _ in blocks if fits(k, c, e)]
            c, e = rng.choice(homes)
            lo, hi = max(c, j.release), min(e, j.deadline) - j.length
            step = rng.randint(0, 8)
            start_times[j.id] = lo + (hi - lo) * step / 8
    placed = tuple(j.placed(start_times[j.id]) for j in jobs)
    assert job_span(placed) == cost
    return Conversion(placed, start_times, cost)


def busy_three_approx(jobs: Sequence[Job], g: int, rng: Optional[random.Random] = None) -> BundleSchedule:
    """Fix start times with the g = infinity optimum, then run GreedyTracking."""
    conv = convert_to_interval_unbounded(jobs, rng)
    sched = greedy_tracking(conv.instance, g, rng)
    return BundleSchedule(sched.bundles, dict(conv.start_times), g)


# ---------------------------------------------------------------------------
# preemptive busy time


def _to_original(x: Fraction, cut: list) -> Fraction:
    """Map a point of the compressed timeline back through excised pieces."""
    for a, b in cut:
        if a <= x:
            x += b - a
        else:
            break
    return x


def _pieces(u: Fraction, v: Fraction, cut: list) -> list:
    """Original-time pieces of the compressed interval [u, v)."""
    out = []
    x = _to_original(u, cut)
    left = v - u
    for a, b in cut:
        if left <= 0:
            break
        if b <= x:
            continue
        if a > x:
            step = min(left, a - x)
            out.append(TimeInterval(x, x + step))
            left -= step
            x = b
    if left > 0:
        out.append(TimeInterval(x, x + left))
    return out


def _add_cut(cut: list, pieces: list) -> list:
    merged = merge_intervals([TimeInterval(a, b) for a, b in cut] + pieces)
    return [(iv.start, iv.end) for iv in merged]


def preemptive_unbounded(jobs: Sequence[Job]) -> tuple[list, PreemptiveSchedule]:
    """Exact preemptive busy time with unbounded capacity.

    Repeatedly open [d - l, d) for the earliest deadline d and the longest
    remaining job due then; every job whose window meets the opened interval
    runs there as much as it can.  The opened interval is then cut out of the
    timeline and the loop continues on the compressed instance.
    """
    jobs = list(jobs)
    rel = {j.id: j.release for j in jobs}
    dl = {j.id: j.deadline for j in jobs}
    rem = {j.id: j.length for j in jobs}
    cut: list = []  # excised pieces in original time, sorted and disjoint
    pieces: dict = {j.id: [] for j in jobs}
    while any(rem.values()):
        live = [k for k in rem if rem[k] > 0]
        d1 = min(dl[k] for k in live)
        ell = max(rem[k] for k in live if dl[k] == d1)
        a = d1 - ell
        for k in live:
            lo = max(rel[k], a)
            if lo >= d1:
                continue
            amt = min(rem[k], d1 - lo)
            pieces[k].extend(_pieces(d1 - amt, d1, cut))
            rem[k] -= amt
        cut = _add_cut(cut, _pieces(a, d1, cut))

        def squeeze(t: Fraction) -> Fraction:
            if t >= d1:
                return t - ell
            if t > a:
                return a
            return t

        for k in rem:
            rel[k] = squeeze(rel[k])
            dl[k] = squeeze(dl[k])
    open_intervals = [TimeInterval(a, b) for a, b in cut]
    sched = PreemptiveSchedule({k: tuple((0, iv) for iv in merge_intervals(v)) for k, v in pieces.items()})
    return open_intervals, sched


def preemptive_bounded(jobs: Sequence[Job], g: int) -> PreemptiveSchedule:
    """Split the unbounded schedule over ceil(n(I)/g) machines per elementary interval."""
    if g < 1:
        raise ValueError("g must be at least 1")
    _, inf = preemptive_unbounded(jobs)
    points = sorted({x for plist in inf.pieces.values() for _, iv in plist for x in (iv.start, iv.end)})
    pieces: dict = {j.id: [] for j in jobs}
    order = sorted(inf.pieces)
    for a, b in zip(points, points[1:]):
        seg = TimeInterval(a, b)
        running = [k for k in order if any(iv.contains(seg) for _, iv in inf.pieces[k])]
        for idx, k in enumerate(running):
            pieces[k].append((idx // g, seg))
    merged = {}
    for k, plist in pieces.items():
        out: list = []
        for m, iv in plist:
            if out and out[-1][0] == m and out[-1][1].end == iv.start:
                out[-1] = (m, TimeInterval(out[-1][1].start, iv.end))
            else:
                out.append((m, iv))
        merged[k] = tuple(out)
    return PreemptiveSchedule(merged)


def bounded_cost_formula(jobs: Sequence[Job], g: int) -> Fraction:
    """Sum over elementary intervals of ceil(n(I)/g) * |I| for the unbounded schedule."""
    _, inf = preemptive_unbounded(jobs)
    points = sorted({x for plist in inf.pieces.values() for _, iv in plist for x in (iv.start, iv.end)})
    total = Fraction(0)
    for a, b in zip(points, points[1:]):
        seg = TimeInterval(a, b)
        n = sum(1 for plist in inf.pieces.values() if any(iv.contains(seg) for _, iv in plist))
        total += ceil_div(n, g) * seg.length
    return total
