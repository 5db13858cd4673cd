"""Two-phase tableau simplex over exact rationals or floats.

Pricing is Dantzig's rule, falling back to Bland's rule after a run of
degenerate pivots so the method cannot cycle.  Fixed variables are
substituted out before the tableau is built, which matters for the
active-time LPs where most assignment variables are pinned to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import to_fraction

LE, GE, EQ = "<=", ">=", "="
FLOAT_TOL = 1e-9
_DEGENERATE_LIMIT = 50


@dataclass
class Constraint:
    coeffs: dict  # variable index -> coefficient
    relation: str
    rhs: object


@dataclass
class LinearProgram:
    """minimize objective . x subject to constraints and lo <= x <= hi.

    ``bounds[i]`` is ``(lo, hi)``; ``hi=None`` means no upper bound.  Lower
    bounds must be finite.
    """

    n_vars: int
    objective: list
    constraints: list = field(default_factory=list)
    bounds: Optional[list] = None

    def add(self, coeffs: dict, relation: str, rhs) -> None:
        self.constraints.append(Constraint(dict(coeffs), relation, rhs))

    def variable_bounds(self) -> list:
        if self.bounds is None:
            return [(0, None)] * self.n_vars
        return self.bounds

    def validate(self) -> None:
        if len(self.objective) != self.n_vars:
            raise ValueError(f"objective has {len(self.objective)} entries for {self.n_vars} variables")
        if self.bounds is not None and len(self.bounds) != self.n_vars:
            raise ValueError(f"bounds has {len(self.bounds)} entries for {self.n_vars} variables")
        for k, con in enumerate(self.constraints):
            if con.relation not in (LE, GE, EQ):
                raise ValueError(f"constraint {k}: unknown relation {con.relation!r}")
            for i in con.coeffs:
                if not 0 <= i < self.n_vars:
                    raise ValueError(f"constraint {k} references variable {i}")
        for i, (lo, hi) in enumerate(self.variable_bounds()):
            if lo is None:
                raise ValueError(f"variable {i} needs a finite lower bound")
            if hi is not None and hi < lo:
                raise ValueError(f"variable {i} has lower bound above upper bound")


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: Optional[list] = None
    objective: Optional[object] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Arith:
    def __init__(self, exact: bool):
        self.exact = exact
        self.tol = 0 if exact else FLOAT_TOL
        self.conv = to_fraction if exact else float
        self.zero = Fraction(0) if exact else 0.0

    def pos(self, x) -> bool:
        return x > self.tol

    def neg(self, x) -> bool:
        return x < -self.tol

    def nonzero(self, x) -> bool:
        return x > self.tol or x < -self.tol


def solve(lp: LinearProgram, exact: bool = True) -> LpSolution:
    """Solve ``lp``; ``exact`` selects rational (default) or float arithmetic."""
    lp.validate()
    ar = _Arith(exact)
    conv = ar.conv
    bounds = [(conv(lo), None if hi is None else conv(hi)) for lo, hi in lp.variable_bounds()]
    cost = [conv(c) for c in lp.objective]

    # presolve: substitute fixed variables, shift the rest to lower bound 0
    free = [i for i, (lo, hi) in enumerate(bounds) if hi is None or hi != lo]
    col_of = {v: k for k, v in enumerate(free)}
    rows = []  # (coeff dict over compact columns, relation, rhs)
    for con in lp.constraints:
        rhs = conv(con.rhs)
        coeffs = {}
        for i, a in con.coeffs.items():
            a = conv(a)
            if not ar.nonzero(a):
                continue
            rhs -= a * bounds[i][0]
            if i in col_of:
                coeffs[col_of[i]] = a
        if not coeffs:
            ok = {LE: not ar.neg(rhs), GE: not ar.pos(rhs), EQ: not ar.nonzero(rhs)}[con.relation]
            if not ok:
                return LpSolution("infeasible")
            continue
        if _implied(coeffs, con.relation, rhs, free, bounds, ar):
            continue
        rows.append((coeffs, con.relation, rhs))
    for k, i in enumerate(free):
        lo, hi = bounds[i]
        if hi is not None:
            rows.append(({k: conv(1)}, LE, hi - lo))

    compact_cost = [cost[i] for i in free]
    result = _simplex(len(free), compact_cost, rows, ar)
    if result[0] != "optimal":
        return LpSolution(result[0])
    _, xs = result
    values = [bounds[i][0] for i in range(lp.n_vars)]
    for k, i in enumerate(free):
        values[i] = values[i] + xs[k]
    objective = sum((cost[i] * values[i] for i in range(lp.n_vars)), ar.zero)
    return LpSolution("optimal", values, objective)


def _implied(coeffs, relation, rhs, free, bounds, ar) -> bool:
    """True when the shifted row holds for every point inside the box bounds."""
    if relation == EQ:
        return False
    lo_act = hi_act = ar.zero
    for k, a in coeffs.items():
        lo, hi = bounds[free[k]]
        width = None if hi is None else hi - lo
        if a > 0:
            if width is None:
                hi_act = None
            elif hi_act is not None:
                hi_act += a * width
        else:
            if width is None:
                lo_act = None
            elif lo_act is not None:
                lo_act += a * width
    if relation == LE:
        return hi_act is not None and not ar.pos(hi_act - rhs)
    return lo_act is not None and not ar.pos(rhs - lo_act)


def _simplex(n: int, cost: Sequence, rows: list, ar: _Arith):
    zero = ar.zero
    one = ar.conv(1)
    # column layout: structural | slack/surplus | artificial
    n_slack = sum(1 for _, rel, _ in rows if rel != EQ)
    n_art = 0
    tableau = []
    basis = []
    slack_col = n
    art_cols = []
    normalised = []
    for coeffs, rel, rhs in rows:
        if ar.neg(rhs):
            coeffs = {k: -v for k, v in coeffs.items()}
            rhs = -rhs
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        normalised.append((coeffs, rel, rhs))
        if rel == GE or rel == EQ:
            n_art += 1
    width = n + n_slack + n_art
    art_start = n + n_slack
    art_next = art_start
    for coeffs, rel, rhs in normalised:
        row = [zero] * (width + 1)
        for k, v in coeffs.items():
            row[k] = v
        row[width] = rhs
        if rel == LE:
            row[slack_col] = one
            basis.append(slack_col)
            slack_col += 1
        else:
            if rel == GE:
                row[slack_col] = -one
                slack_col += 1
            row[art_next] = one
            basis.append(art_next)
            art_cols.append(art_next)
            art_next += 1
        tableau.append(row)

    def reduced_costs(c_full):
        # objective row: d_j = c_j - c_B B^-1 A_j, last entry = -z
        obj = list(c_full) + [zero]
        for r, bcol in enumerate(basis):
            cb = c_full[bcol]
            if ar.nonzero(cb):
                row = tableau[r]
                for k in range(width + 1):
                    if row[k]:
                        obj[k] -= cb * row[k]
        return obj

    def pivot(r, col, obj):
        prow = tableau[r]
        piv = prow[col]
        if piv != one:
            inv = one / piv
            for k in range(width + 1):
                if prow[k]:
                    prow[k] = prow[k] * inv
        nz = [k for k in range(width + 1) if prow[k]]
        for i, row in enumerate(tableau):
            if i != r:
                f = row[col]
                if f:
                    for k in nz:
                        row[k] -= f * prow[k]
                    if not ar.exact:
                        row[col] = zero
        f = obj[col]
        if f:
            for k in nz:
                obj[k] -= f * prow[k]
        basis[r] = col

    def run(obj, allowed):
        bland = False
        degenerate = 0
        while True:
            entering = None
            if bland:
                for k in allowed:
                    if ar.neg(obj[k]):
                        entering = k
                        break
            else:
                best = -ar.tol
                for k in allowed:
                    if obj[k] < best:
                        best = obj[k]
                        entering = k
            if entering is None:
                return "optimal"
            leave = None
            best_ratio = None
            for r, row in enumerate(tableau):
                a = row[entering]
                if ar.pos(a):
                    ratio = row[width] / a
                    if (best_ratio is None or ratio < best_ratio - ar.tol
                            or (abs(ratio - best_ratio) <= ar.tol and basis[r] < basis[leave])):
                        best_ratio = ratio
                        leave = r
            if leave is None:
                return "unbounded"
            if ar.pos(best_ratio):
                degenerate = 0
            else:
                degenerate += 1
                if degenerate > _DEGENERATE_LIMIT:
                    bland = True
            pivot(leave, entering, obj)

    # phase 1
    if art_cols:
        c1 = [zero] * width
        for k in art_cols:
            c1[k] = one
        obj = reduced_costs(c1)
        run(obj, range(width))
        if ar.pos(-obj[width]):
            return ("infeasible",)
        # drive remaining artificials out of the basis
        art_set = set(art_cols)
        r = 0
        while r < len(tableau):
            if basis[r] in art_set:
                row = tableau[r]
                col = next((k for k in range(art_start) if ar.nonzero(row[k])), None)
                if col is None:
                    del tableau[r]
                    del basis[r]
                    continue
                pivot(r, col, obj)
            r += 1
        # drop artificial columns
        for row in tableau:
            del row[art_start:width]
        width = art_start

    c2 = list(cost) + [zero] * (width - n)
    obj = reduced_costs(c2)
    status = run(obj, range(width))
    if status != "optimal":
        return (status,)
    xs = [zero] * n
    for r, bcol in enumerate(basis):
        if bcol < n:
            xs[bcol] = tableau[r][width]
    return ("optimal", xs)
