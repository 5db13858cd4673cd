"""Shared data model: jobs, instances, intervals, spans and lower bounds.

All times are exact rationals (``fractions.Fraction``).  Nothing in here
compares floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

Number = Union[int, Fraction, str]


def to_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"``, ``[num, den]`` pairs and Fractions."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not times")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
            raise TypeError(f"rational pair must hold integers, got {value!r}")
        return Fraction(num, den)
    if isinstance(value, float):
        # exact binary value; callers should prefer strings or pairs
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


@dataclass(frozen=True)
class Job:
    id: str
    release: Fraction
    deadline: Fraction
    length: Fraction

    def __post_init__(self):
        object.__setattr__(self, "release", to_fraction(self.release))
        object.__setattr__(self, "deadline", to_fraction(self.deadline))
        object.__setattr__(self, "length", to_fraction(self.length))
        if not self.release < self.deadline:
            raise ValueError(f"job {self.id}: release must precede deadline")
        if self.length <= 0:
            raise ValueError(f"job {self.id}: length must be positive")
        if self.length > self.deadline - self.release:
            raise ValueError(f"job {self.id}: length exceeds its window")

    @property
    def is_interval(self) -> bool:
        return self.length == self.deadline - self.release

    @property
    def latest_start(self) -> Fraction:
        return self.deadline - self.length

    @property
    def earliest_end(self) -> Fraction:
        return self.release + self.length

    def window(self) -> "TimeInterval":
        return TimeInterval(self.release, self.deadline)

    def slots(self) -> range:
        """Slot indices {r+1, ..., d} of an integral job (slot t is [t-1, t))."""
        return range(int(self.release) + 1, int(self.deadline) + 1)

    def placed(self, start) -> "Job":
        """Interval job pinned at ``start``."""
        start = to_fraction(start)
        return Job(self.id, start, start + self.length, self.length)


@dataclass(frozen=True, order=True)
class TimeInterval:
    start: Fraction
    end: Fraction

    def __post_init__(self):
        object.__setattr__(self, "start", to_fraction(self.start))
        object.__setattr__(self, "end", to_fraction(self.end))
        if not self.start < self.end:
            raise ValueError(f"empty or reversed interval [{self.start}, {self.end})")

    @property
    def length(self) -> Fraction:
        return self.end - self.start

    def overlaps(self, other: "TimeInterval") -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: "TimeInterval") -> bool:
        return self.start <= other.start and other.end <= self.end


def _is_integral(x: Fraction) -> bool:
    return x.denominator == 1


@dataclass(frozen=True)
class ActiveInstance:
    """Slotted single-machine instance.  Releases are shifted so the minimum is 0."""

    jobs: tuple
    g: int

    def __post_init__(self):
        jobs = tuple(self.jobs)
        if not isinstance(self.g, int) or self.g < 1:
            raise ValueError("capacity g must be a positive integer")
        for j in jobs:
            for name in ("release", "deadline", "length"):
                if not _is_integral(getattr(j, name)):
                    raise ValueError(f"job {j.id}: {name} must be integral in the active model")
        ids = [j.id for j in jobs]
        if len(set(ids)) != len(ids):
            raise ValueError("job ids must be unique")
        if jobs:
            shift = min(j.release for j in jobs)
            if shift != 0:
                jobs = tuple(Job(j.id, j.release - shift, j.deadline - shift, j.length) for j in jobs)
        object.__setattr__(self, "jobs", jobs)

    @property
    def T(self) -> int:
        return int(max((j.deadline for j in self.jobs), default=0))

    @property
    def slots(self) -> range:
        return range(1, self.T + 1)

    @property
    def total_length(self) -> int:
        return int(sum(j.length for j in self.jobs))

    def job(self, job_id: str) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)


@dataclass(frozen=True)
class BusyInstance:
    """Continuous-time instance; ``g=None`` means unbounded capacity."""

    jobs: tuple
    g: Optional[int]

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        if self.g is not None and (not isinstance(self.g, int) or self.g < 1):
            raise ValueError("capacity g must be a positive integer or None")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise ValueError("job ids must be unique")

    @property
    def all_interval(self) -> bool:
        return all(j.is_interval for j in self.jobs)


# ---------------------------------------------------------------------------
# spans, masses, demand profiles


def merge_intervals(intervals: Iterable[TimeInterval]) -> list[TimeInterval]:
    """Union of intervals as a sorted list of disjoint, non-touching pieces."""
    out: list[list[Fraction]] = []
    for iv in sorted(intervals):
        if out and iv.start <= out[-1][1]:
            out[-1][1] = max(out[-1][1], iv.end)
        else:
            out.append([iv.start, iv.end])
    return [TimeInterval(a, b) for a, b in out]


def span_of(intervals: Iterable[TimeInterval]) -> Fraction:
    """Measure of the union of ``intervals``."""
    return sum((iv.length for iv in merge_intervals(intervals)), Fraction(0))


def job_span(jobs: Iterable[Job]) -> Fraction:
    """Span of interval jobs (their windows)."""
    return span_of(j.window() for j in jobs)


def mass(jobs: Iterable[Job]) -> Fraction:
    return sum((j.length for j in jobs), Fraction(0))


@dataclass(frozen=True)
class ProfileEntry:
    interval: TimeInterval
    raw: int
    demand: int


@dataclass(frozen=True)
class DemandProfile:
    entries: tuple
    weighted_cost: Fraction

    def raw_mass(self) -> Fraction:
        return sum((e.raw * e.interval.length for e in self.entries), Fraction(0))


def ceil_div(a: int, b: Optional[int]) -> int:
    if b is None:
        return 1 if a > 0 else 0
    return -(-a // b)


def demand_profile(jobs: Sequence[Job], g: Optional[int]) -> DemandProfile:
    """Interesting intervals with nonzero raw demand and their ceil(raw/g) demand.

    ``g=None`` is unbounded capacity, so every busy interval has demand 1.
    """
    for j in jobs:
        if not j.is_interval:
            raise ValueError(f"job {j.id} is not an interval job")
    events: dict[Fraction, int] = {}
    for j in jobs:
        events[j.release] = events.get(j.release, 0) + 1
        events[j.deadline] = events.get(j.deadline, 0) - 1
    points = sorted(events)
    entries = []
    raw = 0
    for a, b in zip(points, points[1:]):
        raw += events[a]
        if raw > 0:
            entries.append(ProfileEntry(TimeInterval(a, b), raw, ceil_div(raw, g)))
    cost = sum((e.demand * e.interval.length for e in entries), Fraction(0))
    return DemandProfile(tuple(entries), cost)


@dataclass(frozen=True)
class LowerBounds:
    mass: Fraction
    span: Fraction
    profile: Optional[Fraction]
    best: Fraction = field(init=False)

    def __post_init__(self):
        parts = [self.mass, self.span]
        if self.profile is not None:
            parts.append(self.profile)
        object.__setattr__(self, "best", max(parts))


def lower_bounds(jobs: Sequence[Job], g: Optional[int], opt_infty=None) -> LowerBounds:
    """Mass, span and demand-profile lower bounds on the optimal busy time.

    For flexible jobs the span bound is ``opt_infty``; if it is not supplied
    it is computed with the exact unbounded-capacity solver.
    """
    jobs = list(jobs)
    if not jobs:
        return LowerBounds(Fraction(0), Fraction(0), Fraction(0))
    m = mass(jobs) / g if g is not None else Fraction(0)
    interval = all(j.is_interval for j in jobs)
    if interval:
        sp = job_span(jobs)
        prof = demand_profile(jobs, g).weighted_cost
    else:
        if opt_infty is None:
            from .busy import convert_to_interval_unbounded

            opt_infty = convert_to_interval_unbounded(jobs).opt_infty
        sp = to_fraction(opt_infty)
        prof = None
    return LowerBounds(m, sp, prof)
