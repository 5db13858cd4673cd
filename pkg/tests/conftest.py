import random

import pytest

from chronoshed.core import ActiveInstance, Job
from chronoshed.instances import random_active, random_busy

_criteria = {}


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py::test_criterion_" in report.nodeid:
        num = int(report.nodeid.rsplit("_", 1)[-1])
        _criteria[num] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        mark = "PASS" if _criteria[num] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {mark}")


def J(jid, r, d, p):
    return Job(str(jid), r, d, p)


@pytest.fixture
def job():
    return J


def acceptance_active(count=200):
    """Seeded random active instances with n <= 6 and T <= 12."""
    out = []
    for s in range(count):
        rr = random.Random(10_000 + s)
        while True:
            n, T, g = rr.randint(1, 6), rr.randint(2, 12), rr.randint(1, 3)
            try:
                out.append(random_active(n, T, g, seed=s).instance)
                break
            except ValueError:  # too crowded for a feasible draw; redraw the shape
                continue
    return out


def acceptance_interval(count=200):
    out = []
    for s in range(count):
        rr = random.Random(20_000 + s)
        n, g = rr.randint(1, 10), rr.randint(1, 4)
        out.append(random_busy(n, g, seed=s, interval_only=True, horizon=rr.randint(4, 20)).instance)
    return out


def acceptance_flexible(count=100):
    out = []
    for s in range(count):
        rr = random.Random(30_000 + s)
        n = rr.randint(1, 8)
        out.append(random_busy(n, 2, seed=s, integer_only=True, horizon=rr.randint(4, 20)).instance)
    return out


def acceptance_rational(count=100):
    out = []
    for s in range(count):
        rr = random.Random(40_000 + s)
        n, g = rr.randint(1, 10), rr.randint(1, 4)
        out.append(random_busy(n, g, seed=s, integer_only=False, horizon=rr.randint(3, 12)).instance)
    return out


def random_slot_pairs(count=500):
    """(instance, slot subset) pairs; instances need not be feasible."""
    out = []
    for s in range(count):
        rr = random.Random(50_000 + s)
        n, T, g = rr.randint(1, 6), rr.randint(1, 12), rr.randint(1, 3)
        jobs = []
        for i in range(n):
            r = rr.randint(0, T - 1)
            d = rr.randint(r + 1, T)
            jobs.append(Job(f"j{i}", r, d, rr.randint(1, d - r)))
        inst = ActiveInstance(jobs, g)
        keep = rr.choice((0.3, 0.5, 0.7, 0.9))
        slots = {t for t in inst.slots if rr.random() < keep}
        out.append((inst, slots))
    return out
