"""Exact two-phase primal simplex over the rationals.

Solves ``min c.x  s.t.  A x = b, x >= 0``.  The tableau is kept row-wise as
Python integers over a per-row positive denominator, reduced by the row gcd
after every update, so no precision is ever lost.

Pricing is Dantzig's most-negative reduced cost; after a run of degenerate
pivots the solver switches to Bland's least-index rule until the objective
strictly improves again, which rules out cycling.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

Row = Mapping[int, Fraction]

DEGENERATE_STREAK = 50


@dataclass
class SimplexResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None
    x: list[Fraction]
    duals: list[Fraction]  # y with c - A^T y >= 0 at optimum
    basis: list[int]
    pivots: int = 0
    bland_pivots: int = 0
    stats: dict = field(default_factory=dict)


def _row_gcd_reduce(ints: np.ndarray, den: int) -> tuple[np.ndarray, int]:
    g = math.gcd(den, *ints.tolist())
    if g > 1:
        return ints // g, den // g
    return ints, den


class _Tableau:
    """Rows ``0..m-1`` are constraints, row ``m`` the reduced-cost row.

    Column layout: ``n`` structural columns, ``m`` artificial columns, rhs.
    """

    def __init__(self, a_rows: Sequence[Row], b: Sequence[Fraction], n: int):
        m = len(a_rows)
        self.m, self.n = m, n
        width = n + m + 1
        self.t = np.zeros((m + 1, width), dtype=object)
        self.den = [1] * (m + 1)
        self.sign = [1] * m
        for i, (row, rhs) in enumerate(zip(a_rows, b)):
            rhs = Fraction(rhs)
            s = -1 if rhs < 0 else 1
            self.sign[i] = s
            den = math.lcm(rhs.denominator, *(Fraction(v).denominator for v in row.values()))
            for j, v in row.items():
                self.t[i, j] = int(s * Fraction(v) * den)
            self.t[i, n + i] = den
            self.t[i, -1] = int(s * rhs * den)
            self.den[i] = den
            self.t[i], self.den[i] = _row_gcd_reduce(self.t[i], den)
        self.basis = [n + i for i in range(m)]

    # -- objective rows

    def set_phase1_objective(self) -> None:
        obj = np.zeros(self.t.shape[1], dtype=object)
        den = math.lcm(*self.den[: self.m]) if self.m else 1
        for i in range(self.m):
            obj -= self.t[i] * (den // self.den[i])
        obj[self.n : self.n + self.m] = 0
        self.t[self.m], self.den[self.m] = _row_gcd_reduce(obj, den)

    def set_objective(self, c: Sequence[Fraction]) -> None:
        """Reduced costs ``c_j - c_B B^-1 A_j`` for the current basis (basic entries are 1)."""
        c = [Fraction(v) for v in c]
        basic = [(i, c[bj]) for i, bj in enumerate(self.basis) if bj < self.n and c[bj]]
        den = math.lcm(*(v.denominator for v in c), *(cb.denominator * self.den[i] for i, cb in basic))
        obj = np.zeros(self.t.shape[1], dtype=object)
        for j, v in enumerate(c):
            obj[j] = int(v * den)
        for i, cb in basic:
            obj -= self.t[i] * int(cb * den / self.den[i])
        self.t[self.m], self.den[self.m] = _row_gcd_reduce(obj, den)

    # -- queries

    def value_of(self, i: int) -> Fraction:
        return Fraction(int(self.t[i, -1]), self.den[i])

    def reduced_cost(self, j: int) -> Fraction:
        return Fraction(int(self.t[self.m, j]), self.den[self.m])

    # -- pivoting

    def pivot(self, r: int, q: int) -> None:
        t = self.t
        p = int(t[r, q])
        col = t[:, q]
        rows = [i for i in range(self.m + 1) if i != r and col[i] != 0]
        if rows:
            idx = np.array(rows)
            e = t[idx, q].reshape(-1, 1)
            block = t[idx] * p - e * t[r]
            for k, i in enumerate(rows):
                den = self.den[i] * p
                ints = block[k]
                if den < 0:
                    den, ints = -den, -ints
                t[i], self.den[i] = _row_gcd_reduce(ints, den)
        if p < 0:
            t[r] = -t[r]
            p = -p
        t[r], self.den[r] = _row_gcd_reduce(t[r], p)
        self.basis[r] = q

    def choose_entering(self, allowed: int, bland: bool) -> int | None:
        obj = self.t[self.m, :allowed]
        neg = np.flatnonzero(obj < 0)
        if neg.size == 0:
            return None
        if bland:
            return int(neg[0])
        vals = obj[neg]
        return int(neg[int(np.argmin(vals))])

    def choose_leaving(self, q: int) -> int | None:
        best, best_ratio = None, None
        col = self.t[: self.m, q]
        for i in np.flatnonzero(col > 0):
            ratio = Fraction(int(self.t[i, -1]), int(col[i]))
            if (
                best is None
                or ratio < best_ratio
                or (ratio == best_ratio and self.basis[i] < self.basis[best])
            ):
                best, best_ratio = int(i), ratio
        return best


def _run(tab: _Tableau, allowed: int, max_pivots: int | None, counters: dict) -> str:
    streak = 0
    bland = False
    last = tab.value_of(tab.m)
    while True:
        q = tab.choose_entering(allowed, bland)
        if q is None:
            return "optimal"
        r = tab.choose_leaving(q)
        if r is None:
            return "unbounded"
        tab.pivot(r, q)
        counters["pivots"] += 1
        counters["bland"] += int(bland)
        if max_pivots is not None and counters["pivots"] > max_pivots:
            raise RuntimeError(f"pivot limit {max_pivots} exceeded")
        now = tab.value_of(tab.m)
        if now == last:
            streak += 1
            if streak >= DEGENERATE_STREAK:
                bland = True
        else:
            streak, bland = 0, False
            last = now


def _crash(tab: _Tableau, start: Sequence[int], prefer: Sequence[int], counters: dict) -> bool:
    """Pivot ``start`` columns into artificial rows; True if the basic solution is feasible.

    Artificials left basic afterwards sit at level zero and are pivoted out,
    trying ``prefer`` columns first.
    """
    n, m = tab.n, tab.m
    for q in start:
        rows = [i for i in range(m) if tab.basis[i] >= n and tab.t[i, q] != 0]
        if rows:
            tab.pivot(rows[0], q)
            counters["pivots"] += 1
    if any(tab.t[i, -1] < 0 for i in range(m)):
        return False
    if any(tab.t[i, -1] != 0 for i in range(m) if tab.basis[i] >= n):
        return False
    order = list(dict.fromkeys(list(prefer) + list(range(n))))
    for i in range(m):
        if tab.basis[i] < n:
            continue
        row = tab.t[i]
        basic = set(tab.basis)
        for q in order:
            if row[q] != 0 and q not in basic:
                tab.pivot(i, q)
                counters["pivots"] += 1
                break
    return True


def solve_standard_form(
    a_rows: Sequence[Row],
    b: Sequence[Fraction],
    c: Sequence[Fraction],
    *,
    start: Sequence[int] | None = None,
    prefer: Sequence[int] = (),
    max_pivots: int | None = None,
) -> SimplexResult:
    """Minimize ``c.x`` subject to ``A x = b`` and ``x >= 0``, exactly.

    ``a_rows`` holds sparse rows ``{column: coefficient}``; ``len(c)`` fixes
    the number of columns.  Duals ``y`` satisfy ``A^T y <= c`` with equality
    on the support of ``x`` when the status is ``"optimal"``.

    ``start`` optionally names columns whose basic solution is expected to
    be feasible (for instance the support of a known feasible point); when
    it is, phase 1 is skipped.  A bad hint only costs time: the solver then
    falls back to the usual two-phase method.
    """
    n = len(c)
    m = len(a_rows)
    counters = {"pivots": 0, "bland": 0}
    crashed = False
    if start is not None:
        tab = _Tableau(a_rows, b, n)
        crashed = _crash(tab, start, prefer, counters)
    if not crashed:
        tab = _Tableau(a_rows, b, n)
        tab.set_phase1_objective()
        _run(tab, n, max_pivots, counters)
        if tab.value_of(m) != 0:
            return SimplexResult("infeasible", None, [], [], list(tab.basis), counters["pivots"], counters["bland"])
        # drive zero-level artificials out where a structural pivot exists
        for i in range(m):
            if tab.basis[i] >= n:
                nz = np.flatnonzero(tab.t[i, :n] != 0)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
                    counters["pivots"] += 1

    tab.set_objective(list(c))
    status = _run(tab, n, max_pivots, counters)
    stats = {"crash": crashed}
    if status == "unbounded":
        return SimplexResult("unbounded", None, [], [], list(tab.basis), counters["pivots"], counters["bland"], stats)

    x = [Fraction(0)] * n
    for i, bj in enumerate(tab.basis):
        if bj < n:
            x[bj] = tab.value_of(i)
    # reduced cost of artificial i is -sign_i * y_i (its phase-2 cost is 0)
    duals = [-tab.sign[i] * tab.reduced_cost(n + i) for i in range(m)]
    value = sum((Fraction(cj) * xj for cj, xj in zip(c, x) if xj), Fraction(0))
    return SimplexResult("optimal", value, x, duals, list(tab.basis), counters["pivots"], counters["bland"], stats)
