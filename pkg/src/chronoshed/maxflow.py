"""Integral max-flow (Dinic) and the slot-feasibility network for active time."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .core import ActiveInstance, Job


@dataclass
class FlowNetwork:
    n: int
    source: int
    sink: int
    edges: list = field(default_factory=list)  # (u, v, capacity)

    def add_edge(self, u: int, v: int, capacity: int) -> int:
        self.edges.append((u, v, capacity))
        return len(self.edges) - 1

    def validate(self) -> None:
        if self.source == self.sink:
            raise ValueError("source and sink coincide")
        for node in (self.source, self.sink):
            if not 0 <= node < self.n:
                raise ValueError(f"terminal {node} outside 0..{self.n - 1}")
        for idx, (u, v, cap) in enumerate(self.edges):
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge {idx} ({u}->{v}) references a missing node")
            if u == v:
                raise ValueError(f"edge {idx} is a self-loop")
            if not isinstance(cap, int) or cap < 0:
                raise ValueError(f"edge {idx} needs a nonnegative integer capacity")


def max_flow(net: FlowNetwork) -> tuple[int, list[int]]:
    """Maximum flow value and per-edge flow, in the order edges were added."""
    net.validate()
    n = net.n
    # residual graph: arc i and its reverse i ^ 1
    head: list[int] = []
    cap: list[int] = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v, c in net.edges:
        adj[u].append(len(head))
        head.append(v)
        cap.append(c)
        adj[v].append(len(head))
        head.append(u)
        cap.append(0)

    s, t = net.source, net.sink
    total = 0
    while True:
        level = [-1] * n
        level[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for a in adj[u]:
                if cap[a] > 0 and level[head[a]] < 0:
                    level[head[a]] = level[u] + 1
                    queue.append(head[a])
        if level[t] < 0:
            break
        it = [0] * n

        def push(u: int, limit: int) -> int:
            if u == t:
                return limit
            while it[u] < len(adj[u]):
                a = adj[u][it[u]]
                v = head[a]
                if cap[a] > 0 and level[v] == level[u] + 1:
                    got = push(v, min(limit, cap[a]))
                    if got:
                        cap[a] -= got
                        cap[a ^ 1] += got
                        return got
                it[u] += 1
            return 0

        while True:
            pushed = push(s, 1 << 62)
            if not pushed:
                break
            total += pushed

    flows = [cap[2 * i + 1] for i in range(len(net.edges))]
    return total, flows


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    assignment: Optional[dict] = None  # job id -> frozenset of slots


def check_feasibility(inst: ActiveInstance, active_slots: Iterable[int],
                      jobs: Optional[Iterable[Job]] = None) -> FeasibilityResult:
    """Can ``jobs`` (default: all) be scheduled using only ``active_slots``?

    Inactive slots keep their node but get a zero-capacity sink edge, so node
    numbering is the same for every call on an instance.
    """
    active = set(active_slots)
    bad = [t for t in active if not 1 <= t <= inst.T]
    if bad:
        raise ValueError(f"slots {sorted(bad)} lie outside 1..{inst.T}")
    jobs = list(inst.jobs if jobs is None else jobs)
    T = inst.T
    n = len(jobs)
    # 0 = source, 1..n = jobs, n+1..n+T = slots, n+T+1 = sink
    sink = n + T + 1
    net = FlowNetwork(n + T + 2, 0, sink)
    unit_edges = []
    for k, job in enumerate(jobs, start=1):
        net.add_edge(0, k, int(job.length))
        for t in job.slots():
            unit_edges.append((job.id, t, net.add_edge(k, n + t, 1)))
    for t in range(1, T + 1):
        net.add_edge(n + t, sink, inst.g if t in active else 0)
    value, flows = max_flow(net)
    if value != sum(int(j.length) for j in jobs):
        return FeasibilityResult(False)
    assignment: dict = {j.id: set() for j in jobs}
    for job_id, t, idx in unit_edges:
        if flows[idx]:
            assignment[job_id].add(t)
    return FeasibilityResult(True, {k: frozenset(v) for k, v in assignment.items()})


def validate_assignment(inst: ActiveInstance, active_slots: Iterable[int],
                        assignment: dict) -> list[str]:
    """Violations of window, multiplicity and capacity rules (empty when valid)."""
    active = set(active_slots)
    problems = []
    load: dict[int, int] = {}
    for job in inst.jobs:
        slots = assignment.get(job.id)
        if slots is None:
            problems.append(f"job {job.id} is not assigned")
            continue
        slots = list(slots)
        if len(set(slots)) != len(slots):
            problems.append(f"job {job.id} uses a slot twice")
        if len(set(slots)) != job.length:
            problems.append(f"job {job.id} gets {len(set(slots))} units, needs {job.length}")
        window = job.slots()
        for t in set(slots):
            if t not in window:
                problems.append(f"job {job.id} placed in slot {t} outside its window")
            if t not in active:
                problems.append(f"job {job.id} placed in inactive slot {t}")
            load[t] = load.get(t, 0) + 1
    extra = set(assignment) - {j.id for j in inst.jobs}
    if extra:
        problems.append(f"unknown jobs in assignment: {sorted(extra)}")
    for t, units in sorted(load.items()):
        if units > inst.g:
            problems.append(f"slot {t} carries {units} units, capacity {inst.g}")
    return problems
