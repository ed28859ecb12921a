"""Linear-programming certificates for the bias of ``f`` on maximal Mermin violators.

The programs live on full probability tables: one variable per entry
``P(a|x)``, nonnegative, with normalization, no-signalling marginal
equalities, and the maximal-violation conditions as equality rows.

Exact solves go through an affine chart of the equality-feasible set
(``x = origin + K y`` with ``y`` the free correlators).  The chart is checked
before use: every direction must lie in the kernel of the equality rows,
the origin must satisfy them, and ``rank(A) + rank(K)`` must equal the
number of variables (certified with ranks modulo a prime, which can only
under-estimate rational ranks).  The reduced problem
``min g.y  s.t.  origin + K y >= 0`` is solved through its dual with the
exact simplex, and the primal optimum is read back from the dual
multipliers.

Larger programs can be restricted to tables invariant under the party
permutations that fix the target input.  The group is checked to map every
row to a row; averaging over it shows the restricted optimum equals the full
one.  Whatever the route, the final witness table is re-checked against
every original row (exactly, or within tolerance in float mode).
"""

from __future__ import annotations

import json
import logging
import math
import time
from collections.abc import Callable, Hashable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache, partial
from pathlib import Path

import numpy as np
import scipy.optimize
import scipy.sparse

from .behavior import (
    Behavior,
    CorrelatorKey,
    char_sign,
    check_party_count,
    correlator_keys,
    format_bits,
    format_fraction,
    ghz_behavior,
    parse_bits,
    save_behavior,
    uniform_behavior,
)
from .config import limits
from .errors import (
    DimensionMismatch,
    InfeasibleProgram,
    NonMerminInput,
    NumericallyUnstable,
    UnboundedProgram,
)
from .mermin import free_correlator_keys, mermin_inputs, mermin_sign
from .randomness import f_value, h_n
from .simplex import solve_standard_form

log = logging.getLogger(__name__)

EQ, GE = "=", ">="
MOD_PRIME = 2_147_483_647


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[Hashable, Fraction]
    relation: str
    rhs: Fraction
    name: str = ""

    def __post_init__(self) -> None:
        if self.relation not in (EQ, GE):
            raise ValueError(f"relation must be '=' or '>=', got {self.relation!r}")

    def lhs(self, values: Mapping[Hashable, Fraction]) -> Fraction:
        return sum((c * values.get(v, 0) for v, c in self.coeffs.items()), Fraction(0))

    def slack(self, values: Mapping[Hashable, Fraction]) -> Fraction:
        """Signed residual: zero for satisfied equalities, >= 0 for satisfied inequalities."""
        return self.lhs(values) - self.rhs


@dataclass(frozen=True)
class AffineChart:
    """Parameterization ``x = origin + sum_k y_k directions[k]`` of the equality-feasible set."""

    origin: Mapping[Hashable, Fraction]
    directions: Sequence[Mapping[Hashable, Fraction]]
    labels: Sequence[Hashable]


@dataclass(frozen=True)
class LinearProgram:
    """``min objective.x`` over nonnegative variables subject to ``constraints``."""

    variables: tuple[Hashable, ...]
    objective: Mapping[Hashable, Fraction]
    constraints: tuple[Constraint, ...]
    n: int | None = None
    target: int | None = None
    chart_builder: Callable[[], AffineChart] | None = field(default=None, compare=False, repr=False)
    description: str = ""

    def __post_init__(self) -> None:
        known = set(self.variables)
        for con in self.constraints:
            unknown = set(con.coeffs) - known
            if unknown:
                raise DimensionMismatch(f"constraint {con.name!r} uses undeclared {sorted(unknown, key=str)[:3]}")
        if set(self.objective) - known:
            raise DimensionMismatch("objective uses undeclared variables")

    @cached_property
    def chart(self) -> AffineChart | None:
        """Correlator chart of the equality-feasible set, built on first use."""
        return self.chart_builder() if self.chart_builder is not None else None

    def objective_value(self, values: Mapping[Hashable, Fraction]) -> Fraction:
        return sum((c * values.get(v, 0) for v, c in self.objective.items()), Fraction(0))

    def with_objective(self, objective: Mapping[Hashable, Fraction]) -> LinearProgram:
        return LinearProgram(
            self.variables, dict(objective), self.constraints, self.n, self.target, self.chart_builder, self.description
        )

    def without(self, prefix: str) -> LinearProgram:
        """Copy with every constraint whose name starts with ``prefix`` removed (chart dropped)."""
        kept = tuple(c for c in self.constraints if not c.name.startswith(prefix))
        return LinearProgram(self.variables, self.objective, kept, self.n, self.target, None, self.description)

    def count(self, prefix: str) -> int:
        return sum(1 for c in self.constraints if c.name.startswith(prefix))

    def violations(
        self, values: Mapping[Hashable, Fraction | float], tolerance: float | Fraction = 0
    ) -> list[tuple[str, float]]:
        """Constraints (and nonnegativity bounds) missed by more than ``tolerance``."""
        out = []
        for v in self.variables:
            val = values.get(v, 0)
            if val < -tolerance:
                out.append((f"nonneg{v}", float(val)))
        for con in self.constraints:
            s = sum((c * values.get(v, 0) for v, c in con.coeffs.items()), 0) - con.rhs
            if (con.relation == EQ and abs(s) > tolerance) or (con.relation == GE and s < -tolerance):
                out.append((con.name, float(s)))
        return out


@dataclass
class Certificate:
    status: str  # "Optimal" | "Infeasible"
    optimal_value: Fraction | float | None
    values: dict[Hashable, Fraction | float]
    mode: str  # "Exact" | "Float"
    tolerance: float | None = None
    n: int | None = None
    target: int | None = None
    max_residual: float = 0.0
    seconds: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def witness(self) -> Behavior | None:
        """Optimizing table as a behavior (exact mode, table programs only)."""
        if self.n is None or self.status != "Optimal" or self.mode != "Exact":
            return None
        size = 1 << self.n
        rows = [[Fraction(self.values.get((x, a), 0)) for a in range(size)] for x in range(size)]
        return Behavior.from_rows(self.n, rows)

    def meets(self, bound: Fraction, tolerance: float = 0.0) -> bool:
        if self.status != "Optimal" or self.optimal_value is None:
            return False
        return self.optimal_value >= bound - Fraction(tolerance if self.mode == "Float" else 0)

    def to_json(self, witness_file: str | None = None) -> dict:
        value = self.optimal_value
        if isinstance(value, Fraction):
            value = format_fraction(value)
        return {
            "n": self.n,
            "input": format_bits(self.target, self.n) if self.target is not None else None,
            "status": self.status,
            "value": value,
            "mode": self.mode if self.mode == "Exact" else f"Float({self.tolerance:g})",
            "witness_file": witness_file,
            "max_residual": self.max_residual,
            "info": self.info,
        }


# ---------------------------------------------------------------- program construction


def _table_vars(n: int) -> tuple[tuple[int, int], ...]:
    size = 1 << n
    return tuple((x, a) for x in range(size) for a in range(size))


def normalization_rows(n: int) -> list[Constraint]:
    size = 1 << n
    return [
        Constraint({(x, a): Fraction(1) for a in range(size)}, EQ, Fraction(1), f"norm[{format_bits(x, n)}]")
        for x in range(size)
    ]


def no_signalling_rows(n: int) -> list[Constraint]:
    """Single-party marginal equalities; together with normalization they imply every subset marginal."""
    rows = []
    size = 1 << n
    for i in range(n):
        bit = 1 << i
        for x in range(size):
            if x & bit:
                continue
            for a in range(size):
                if a & bit:
                    continue
                coeffs = {
                    (x, a): Fraction(1),
                    (x, a | bit): Fraction(1),
                    (x | bit, a): Fraction(-1),
                    (x | bit, a | bit): Fraction(-1),
                }
                rows.append(Constraint(coeffs, EQ, Fraction(0), f"ns[{i + 1}|{format_bits(x, n)}|{format_bits(a, n)}]"))
    return rows


def mermin_rows(n: int) -> list[Constraint]:
    full = (1 << n) - 1
    return [
        Constraint(
            {(x, a): Fraction(char_sign(a, full)) for a in range(1 << n)},
            EQ,
            Fraction(mermin_sign(x)),
            f"mermin[{format_bits(x, n)}]",
        )
        for x in mermin_inputs(n)
    ]


def correlator_chart(n: int, origin: Behavior, keys: Sequence[CorrelatorKey]) -> AffineChart:
    size = 1 << n
    scale = Fraction(1, size)
    dirs = []
    for s, xs in keys:
        d = {}
        for x in range(size):
            if x & s != xs:
                continue
            for a in range(size):
                d[(x, a)] = scale * char_sign(a, s)
        dirs.append(d)
    orig = {(x, a): v for x, row in enumerate(origin.table) for a, v in enumerate(row) if v}
    return AffineChart(orig, dirs, list(keys))


@lru_cache(maxsize=4)
def _lemma1_chart(n: int, mermin: bool) -> AffineChart:
    if mermin:
        return correlator_chart(n, ghz_behavior(n), free_correlator_keys(n))
    return correlator_chart(n, uniform_behavior(n), correlator_keys(n))


def build_lemma1_lp(n: int, x_target: int | str, *, mermin: bool = True) -> LinearProgram:
    """Minimize ``P(f(a) = h_n | x_target)`` over maximally Mermin-violating no-signalling tables.

    With ``mermin=False`` the violation conditions are left out and the
    feasible set is the whole no-signalling polytope (negative control).
    """
    check_party_count(n, odd=True)
    x_target = parse_bits(x_target) if isinstance(x_target, str) else x_target
    if not 0 <= x_target < 1 << n or bin(x_target).count("1") % 2 == 0:
        raise NonMerminInput(f"{format_bits(x_target, n)} is not an odd-parity input")
    h = h_n(n)
    objective = {(x_target, a): Fraction(1) for a in range(1 << n) if f_value(a) == h}
    cons = normalization_rows(n) + no_signalling_rows(n)
    if mermin:
        cons += mermin_rows(n)
    chart = partial(_lemma1_chart, n, mermin)
    desc = f"min P(f=h_{n}|{format_bits(x_target, n)})" + ("" if mermin else " without Mermin rows")
    return LinearProgram(_table_vars(n), objective, tuple(cons), n, x_target, chart, desc)


# ---------------------------------------------------------------- exact solving

INT_CAP = 1 << 20
HINT_ABOVE = 256
_VERIFIED: dict[tuple, tuple[tuple, dict]] = {}


def _rank_mod_p(rows: np.ndarray, p: int = MOD_PRIME) -> int:
    a = rows.astype(np.int64) % p
    m, ncols = a.shape
    rank = 0
    for col in range(ncols):
        if rank == m:
            break
        piv = np.flatnonzero(a[rank:, col])
        if piv.size == 0:
            continue
        r = rank + int(piv[0])
        if r != rank:
            a[[rank, r]] = a[[r, rank]]
        inv = pow(int(a[rank, col]), p - 2, p)
        a[rank] = (a[rank] * inv) % p
        below = np.flatnonzero(a[rank + 1 :, col]) + rank + 1
        if below.size:
            factors = a[below, col].reshape(-1, 1)
            a[below] = (a[below] - (factors * a[rank]) % p) % p
        rank += 1
    return rank


def _scaled_rows(rows: Iterable[Mapping[Hashable, Fraction]]) -> list[dict[Hashable, int]]:
    """Each row times the lcm of its denominators (scaling leaves kernels and ranks unchanged)."""
    out = []
    for row in rows:
        den = math.lcm(*(Fraction(v).denominator for v in row.values())) if row else 1
        out.append({k: int(Fraction(v) * den) for k, v in row.items() if v})
    return out


def _int_sparse(rows: Sequence[Mapping[Hashable, int]], index: Mapping[Hashable, int], width: int):
    r, c, d = [], [], []
    for i, row in enumerate(rows):
        for k, v in row.items():
            r.append(i)
            c.append(index[k])
            d.append(v)
    return scipy.sparse.csr_array((np.array(d, dtype=np.int64), (r, c)), shape=(len(rows), width))


def _mod_p_dense(rows: Sequence[Mapping[Hashable, int]], index: Mapping[Hashable, int], width: int) -> np.ndarray:
    out = np.zeros((len(rows), width), dtype=np.int64)
    for i, row in enumerate(rows):
        for k, v in row.items():
            out[i, index[k]] = v % MOD_PRIME
    return out


def _fingerprint(lp: LinearProgram) -> tuple:
    return tuple(
        (c.relation, c.rhs, tuple(sorted(c.coeffs.items(), key=repr))) for c in lp.constraints
    ) + (lp.variables,)


def verify_chart(lp: LinearProgram) -> dict:
    """Check that ``lp.chart`` parameterizes exactly the equality-feasible affine set.

    Kernel membership is an exact integer matrix product; the dimension count
    uses ranks modulo a prime, which never exceed the rational ranks, so
    ``rank_p(A) + rank_p(K) = #vars`` forces both to be full.
    """
    chart = lp.chart
    if chart is None:
        raise ValueError("program has no chart")
    if any(c.relation != EQ for c in lp.constraints):
        raise ValueError("charts are only used for equality-constrained programs")
    key = (id(chart), hash(_fingerprint(lp)))
    cached = _VERIFIED.get(key)
    if cached is not None and cached[0] == _fingerprint(lp):
        log.debug("chart verification reused")
        return dict(cached[1])
    for con in lp.constraints:
        if con.lhs(chart.origin) != con.rhs:
            raise ValueError(f"chart origin violates {con.name}")
    index = {v: i for i, v in enumerate(lp.variables)}
    width = len(lp.variables)
    a_rows = _scaled_rows(c.coeffs for c in lp.constraints)
    k_rows = _scaled_rows(chart.directions)
    small = all(abs(v) <= INT_CAP for row in a_rows + k_rows for v in row.values()) and width <= INT_CAP
    if small:
        prod = (_int_sparse(a_rows, index, width) @ _int_sparse(k_rows, index, width).T).tocoo()
        bad = np.flatnonzero(prod.data)
        if bad.size:
            i, k = int(prod.row[bad[0]]), int(prod.col[bad[0]])
            raise ValueError(f"chart direction {chart.labels[k]} leaves the kernel of {lp.constraints[i].name}")
    else:
        for con in lp.constraints:
            for k, d in enumerate(chart.directions):
                if con.lhs(d) != 0:
                    raise ValueError(f"chart direction {chart.labels[k]} leaves the kernel of {con.name}")
    rank_a = _rank_mod_p(_mod_p_dense(a_rows, index, width))
    rank_k = _rank_mod_p(_mod_p_dense(k_rows, index, width))
    if rank_a + rank_k != width:
        raise ValueError(f"chart does not span the feasible set: rank(A)={rank_a}, rank(K)={rank_k}, vars={width}")
    result = {"rank_equalities": rank_a, "chart_dim": rank_k}
    _VERIFIED[key] = (_fingerprint(lp), result)
    return dict(result)


def _float_basis_hint(
    rows: Sequence[Mapping[int, Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]
) -> tuple[list[int] | None, list[int]]:
    """Starting columns (positive in a HiGHS optimum) and preferred fillers (zero reduced cost)."""
    r, col, d = [], [], []
    for i, row in enumerate(rows):
        for j, v in row.items():
            r.append(i)
            col.append(j)
            d.append(float(v))
    a = scipy.sparse.csr_array((d, (r, col)), shape=(len(rows), len(c)))
    res = scipy.optimize.linprog(
        np.array([float(v) for v in c]), A_eq=a, b_eq=np.array([float(v) for v in b]),
        bounds=(0, None), method="highs",
    )
    if res.status != 0:
        return None, []
    lam, rc = res.x, res.lower.marginals
    start = [int(j) for j in np.argsort(-lam, kind="stable") if lam[j] > 1e-9]
    prefer = [int(j) for j in np.argsort(rc, kind="stable") if rc[j] < 1e-9]
    return start, prefer


def _solve_via_chart(lp: LinearProgram, max_pivots: int | None, hint: bool) -> tuple[str, dict, dict]:
    chart = lp.chart
    info = {"route": "correlator-chart dual", **verify_chart(lp)}
    variables = list(lp.variables)
    origin = [Fraction(chart.origin.get(v, 0)) for v in variables]
    g = [sum((Fraction(c) * d.get(v, 0) for v, c in lp.objective.items()), Fraction(0)) for d in chart.directions]
    index = {v: i for i, v in enumerate(variables)}
    # dual: min origin.lam  s.t.  K^T lam = g, lam >= 0
    rows = [{index[v]: Fraction(c) for v, c in d.items()} for d in chart.directions]
    start, prefer = _float_basis_hint(rows, g, origin) if hint else (None, [])
    res = solve_standard_form(rows, g, origin, start=start, prefer=prefer, max_pivots=max_pivots)
    info.update(pivots=res.pivots, bland_pivots=res.bland_pivots, warm_start=bool(res.stats.get("crash")))
    if res.status == "unbounded":
        return "Infeasible", {}, info
    if res.status == "infeasible":
        raise UnboundedProgram("reduced dual infeasible: the program is unbounded")
    y = [-v for v in res.duals]
    values = dict(chart.origin)
    for yk, d in zip(y, chart.directions):
        if yk:
            for v, c in d.items():
                values[v] = values.get(v, Fraction(0)) + yk * c
    values = {v: values.get(v, Fraction(0)) for v in variables}
    const = sum((Fraction(c) * chart.origin.get(v, 0) for v, c in lp.objective.items()), Fraction(0))
    info["dual_bound"] = format_fraction(const - res.value)
    return "Optimal", values, info


def _solve_direct(lp: LinearProgram, max_pivots: int | None) -> tuple[str, dict, dict]:
    variables = list(lp.variables)
    index = {v: i for i, v in enumerate(variables)}
    rows, rhs = [], []
    extra = 0
    for con in lp.constraints:
        row = {index[v]: Fraction(c) for v, c in con.coeffs.items() if c}
        if con.relation == GE:
            row[len(variables) + extra] = Fraction(-1)
            extra += 1
        rows.append(row)
        rhs.append(Fraction(con.rhs))
    cost = [Fraction(lp.objective.get(v, 0)) for v in variables] + [Fraction(0)] * extra
    res = solve_standard_form(rows, rhs, cost, max_pivots=max_pivots)
    info = {"route": "direct two-phase", "pivots": res.pivots, "bland_pivots": res.bland_pivots}
    if res.status == "infeasible":
        return "Infeasible", {}, info
    if res.status == "unbounded":
        raise UnboundedProgram("objective unbounded below")
    return "Optimal", {v: res.x[i] for i, v in enumerate(variables)}, info


def solve_exact(
    lp: LinearProgram,
    *,
    use_chart: bool = True,
    hint: str = "auto",
    reduce: bool = False,
    max_pivots: int | None = None,
) -> Certificate:
    """Exact optimum of ``lp`` with a witness re-checked against every row.

    ``hint`` picks the starting basis of the chart route: ``"highs"`` crashes
    in the support of a floating-point optimum, ``"none"`` runs the plain
    two-phase method, ``"auto"`` uses the hint above 256 variables.  Hints
    only steer pivoting; optimality is decided by exact reduced costs.
    ``reduce=True`` first restricts to tables invariant under the party
    permutations that fix the target input (see ``reduce_by_stabilizer``).

    Raises ``InfeasibleProgram`` when no feasible point exists.
    """
    if hint not in ("auto", "highs", "none"):
        raise ValueError(f"hint must be 'auto', 'highs' or 'none', got {hint!r}")
    start = time.perf_counter()
    if reduce:
        red = reduce_by_stabilizer(lp)
        status, small, info = _solve_direct(red.program, max_pivots)
        values = red.expand(small) if status == "Optimal" else {}
        info.update(red.summary())
    elif use_chart and lp.chart is not None:
        use_hint = hint == "highs" or (hint == "auto" and len(lp.variables) > HINT_ABOVE)
        status, values, info = _solve_via_chart(lp, max_pivots, use_hint)
    else:
        status, values, info = _solve_direct(lp, max_pivots)
    if status == "Infeasible":
        raise InfeasibleProgram(f"{lp.description or 'program'} is infeasible")
    bad = lp.violations(values)
    if bad:
        raise ArithmeticError(f"exact witness violates {len(bad)} rows, first {bad[0]}")
    value = lp.objective_value(values)
    if "dual_bound" in info and Fraction(info["dual_bound"]) != value:
        raise ArithmeticError(f"primal {value} and dual {info['dual_bound']} disagree")
    return Certificate(
        "Optimal", value, values, "Exact", None, lp.n, lp.target, 0.0, time.perf_counter() - start, info
    )


# ---------------------------------------------------------------- stabilizer reduction


def stabilizer_generators(n: int, x: int) -> list[tuple[int, ...]]:
    """Adjacent transpositions within the parties with ``x_i = 1`` and within those with ``x_i = 0``."""
    gens = []
    for block in ([i for i in range(n) if x >> i & 1], [i for i in range(n) if not x >> i & 1]):
        for u, v in zip(block, block[1:]):
            perm = list(range(n))
            perm[u], perm[v] = v, u
            gens.append(tuple(perm))
    return gens


def _signature(con: Constraint, table: Sequence[int] | None = None) -> tuple:
    """Hashable form of a row, optionally after relabelling masks through ``table``."""
    if table is None:
        items = con.coeffs.items()
    else:
        items = (((table[x], table[a]), c) for (x, a), c in con.coeffs.items())
    return con.relation, con.rhs, frozenset((v, c) for v, c in items if c)


def check_invariance(lp: LinearProgram, generators: Sequence[Sequence[int]]) -> None:
    """Raise ``ValueError`` unless every generator maps rows to rows and fixes the objective."""
    if lp.n is None:
        raise ValueError("invariance is checked on table programs only")
    rows = {_signature(c) for c in lp.constraints}
    objective = {v: c for v, c in lp.objective.items() if c}
    for perm in generators:
        table = [_permute_mask(m, perm) for m in range(1 << lp.n)]
        if {(table[x], table[a]): c for (x, a), c in objective.items()} != objective:
            raise ValueError(f"party map {list(perm)} changes the objective")
        for con in lp.constraints:
            if _signature(con, table) not in rows:
                raise ValueError(f"party map {list(perm)} sends {con.name} outside the program")


@dataclass(frozen=True)
class ReducedProgram:
    """Program over orbit variables; ``orbit_of`` maps each table entry to its orbit."""

    program: LinearProgram
    orbit_of: Mapping[Hashable, Hashable]
    group_order: int
    original_rows: int

    def expand(self, values: Mapping[Hashable, Fraction | float]) -> dict:
        return {v: values.get(o, 0) for v, o in self.orbit_of.items()}

    def summary(self) -> dict:
        return {
            "reduction": "stabilizer of the target input",
            "group_order": self.group_order,
            "reduced_variables": len(self.program.variables),
            "reduced_rows": len(self.program.constraints),
            "original_rows": self.original_rows,
        }


def reduce_by_stabilizer(lp: LinearProgram) -> ReducedProgram:
    """Restrict a table program to tables invariant under party maps fixing ``lp.target``.

    The group is checked to preserve every row and the objective.  Averaging
    any optimal table over the group then gives an invariant table with the
    same value, so the restricted optimum equals the full one.
    """
    if lp.n is None or lp.target is None:
        raise ValueError("reduction needs a table program with a target input")
    n, x = lp.n, lp.target
    check_invariance(lp, stabilizer_generators(n, x))
    ones = [i for i in range(n) if x >> i & 1]
    zeros = [i for i in range(n) if not x >> i & 1]

    def orbit(var: tuple[int, int]) -> tuple:
        xs, a = var
        kind = [2 * (xs >> i & 1) + (a >> i & 1) for i in range(n)]
        return tuple(sorted(kind[i] for i in ones)), tuple(sorted(kind[i] for i in zeros))

    orbit_of = {v: orbit(v) for v in lp.variables}
    labels = tuple(sorted(set(orbit_of.values())))

    def fold(coeffs: Mapping[Hashable, Fraction]) -> dict:
        out: dict = {}
        for v, c in coeffs.items():
            o = orbit_of[v]
            out[o] = out.get(o, Fraction(0)) + c
        return {o: c for o, c in out.items() if c}

    seen, rows = set(), []
    for con in lp.constraints:
        coeffs = fold(con.coeffs)
        if not coeffs and ((con.relation == EQ and con.rhs == 0) or (con.relation == GE and con.rhs <= 0)):
            continue
        sig = (con.relation, con.rhs, frozenset(coeffs.items()))
        if sig not in seen:
            seen.add(sig)
            rows.append(Constraint(coeffs, con.relation, con.rhs, con.name))
    order = math.factorial(len(ones)) * math.factorial(len(zeros))
    small = LinearProgram(labels, fold(lp.objective), tuple(rows), None, None, None, lp.description + " (orbits)")
    return ReducedProgram(small, orbit_of, order, len(lp.constraints))


# ---------------------------------------------------------------- floating point

FLOAT_REDUCE_ABOVE = 1024


def _sparse_system(lp: LinearProgram):
    index = {v: i for i, v in enumerate(lp.variables)}
    parts = {EQ: ([], [], [], []), GE: ([], [], [], [])}
    for con in lp.constraints:
        r, c, d, b = parts[con.relation]
        row = len(b)
        for v, coef in con.coeffs.items():
            r.append(row)
            c.append(index[v])
            d.append(float(coef))
        b.append(float(con.rhs))
    width = len(lp.variables)

    def mat(key):
        r, c, d, b = parts[key]
        if not b:
            return None, None
        return scipy.sparse.csr_array((d, (r, c)), shape=(len(b), width)), np.array(b)

    cost = np.zeros(width)
    for v, coef in lp.objective.items():
        cost[index[v]] = float(coef)
    return index, cost, mat(EQ), mat(GE)


def _residual(system, xv: np.ndarray) -> float:
    _, _, (a_eq, b_eq), (a_ge, b_ge) = system
    worst = max(0.0, float(-xv.min()))
    if a_eq is not None:
        worst = max(worst, float(np.abs(a_eq @ xv - b_eq).max()))
    if a_ge is not None:
        worst = max(worst, float(np.maximum(b_ge - a_ge @ xv, 0).max()))
    return worst


def _highs(system, feas_tol: float):
    _, cost, (a_eq, b_eq), (a_ge, b_ge) = system
    opts = {"primal_feasibility_tolerance": feas_tol, "dual_feasibility_tolerance": feas_tol}
    return scipy.optimize.linprog(
        cost,
        A_ub=-a_ge if a_ge is not None else None,
        b_ub=-b_ge if b_ge is not None else None,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=(0, None),
        method="highs",
        options=opts,
    )


def solve_float(lp: LinearProgram, tolerance: float = 1e-9, *, reduce: bool | None = None) -> Certificate:
    """HiGHS solve with primal residuals checked (and one tightened re-solve) against ``tolerance``.

    With ``reduce`` (default: table programs above 1024 variables) HiGHS
    sees the stabilizer-reduced program; the lifted table is still checked
    against every row of ``lp``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    start = time.perf_counter()
    if reduce is None:
        reduce = lp.target is not None and len(lp.variables) > FLOAT_REDUCE_ABOVE
    full = _sparse_system(lp)
    red = reduce_by_stabilizer(lp) if reduce else None
    inner = _sparse_system(red.program) if red else full
    lift = np.array([inner[0][red.orbit_of[v]] for v in lp.variables]) if red else None

    res, xv = None, None
    worst = np.inf
    for feas_tol in (min(1e-7, tolerance), max(tolerance * 1e-2, 1e-10)):
        res = _highs(inner, feas_tol)
        if res.status == 2:
            raise InfeasibleProgram(f"{lp.description or 'program'} is infeasible")
        if res.status == 3:
            raise UnboundedProgram("objective unbounded below")
        if res.status != 0:
            continue
        xv = res.x[lift] if red else res.x
        worst = _residual(full, xv)
        if worst <= tolerance:
            break
    if xv is None or res.status != 0 or worst > tolerance:
        raise NumericallyUnstable(f"residual {worst:.3g} exceeds tolerance {tolerance:g} ({getattr(res, 'message', '')})")
    values = {v: float(xv[i]) for v, i in full[0].items()}
    info = {"route": "highs", "iterations": int(getattr(res, "nit", 0))}
    if red:
        info.update(red.summary())
    return Certificate(
        "Optimal", float(full[1] @ xv), values, "Float", tolerance, lp.n, lp.target, worst,
        time.perf_counter() - start, info,
    )


# ---------------------------------------------------------------- Lemma-1 sweep


@dataclass
class Lemma1Report:
    n: int
    mode: str
    certificates: dict[int, Certificate]
    bound: Fraction = Fraction(1, 2)
    tolerance: float = 0.0
    mermin: bool = True
    reduction: dict[int, str] = field(default_factory=dict)

    def failures(self) -> list[int]:
        return [x for x, c in self.certificates.items() if not c.meets(self.bound, self.tolerance)]

    @property
    def holds(self) -> bool:
        return not self.failures()

    def minimum(self) -> Fraction | float:
        return min(c.optimal_value for c in self.certificates.values())


def _symmetry_representatives(n: int, inputs: Sequence[int]) -> dict[int, tuple[int, tuple[int, ...]]]:
    """Map each input to a representative of its party-permutation orbit and a permutation to it.

    Party permutations preserve the program (``f``, ``h_n`` and the
    conditions depend only on Hamming weights), so inputs of equal weight
    share the optimum.
    """
    reps: dict[int, int] = {}
    out = {}
    for x in inputs:
        k = bin(x).count("1")
        rep = reps.setdefault(k, x)
        ones_x = [i for i in range(n) if x >> i & 1]
        ones_r = [i for i in range(n) if rep >> i & 1]
        zeros_x = [i for i in range(n) if not x >> i & 1]
        zeros_r = [i for i in range(n) if not rep >> i & 1]
        perm = [0] * n
        for src, dst in zip(ones_r + zeros_r, ones_x + zeros_x):
            perm[src] = dst
        out[x] = (rep, tuple(perm))
    return out


def certify_lemma1(
    n: int,
    *,
    mode: str = "exact",
    tolerance: float | None = None,
    inputs: Sequence[int] | None = None,
    mermin: bool = True,
    symmetry: bool = False,
    reduce: bool | None = None,
) -> Lemma1Report:
    """Solve the Lemma-1 program for every odd-parity input (or ``inputs``).

    ``symmetry`` solves one input per Hamming weight and maps the result to
    the others.  ``reduce`` restricts each single program to tables invariant
    under the party maps fixing its own input; by default it is on above 256
    table entries, so every input still gets its own solve.
    """
    cfg = limits()
    check_party_count(n, odd=True)
    if mode not in ("exact", "float"):
        raise ValueError(f"mode must be 'exact' or 'float', got {mode!r}")
    if mode == "exact" and n > cfg.exact_max_n:
        raise ValueError(f"exact mode is capped at n={cfg.exact_max_n}; use float mode")
    tol = cfg.float_tolerance if tolerance is None else tolerance
    targets = list(inputs) if inputs is not None else mermin_inputs(n)
    plan = _symmetry_representatives(n, targets) if symmetry else {x: (x, tuple(range(n))) for x in targets}
    solved: dict[int, Certificate] = {}
    certs: dict[int, Certificate] = {}
    reduction = {}
    for x in targets:
        rep, perm = plan[x]
        if rep not in solved:
            lp = build_lemma1_lp(n, rep, mermin=mermin)
            shrink = len(lp.variables) > HINT_ABOVE if reduce is None else reduce
            solved[rep] = solve_exact(lp, reduce=shrink) if mode == "exact" else solve_float(lp, tol, reduce=shrink)
            log.info("n=%d x=%s value=%s (%.2fs)", n, format_bits(rep, n), solved[rep].optimal_value, solved[rep].seconds)
        certs[x] = solved[rep] if rep == x else _permuted(solved[rep], perm, x)
        if rep != x:
            reduction[x] = f"from {format_bits(rep, n)} via party map {list(p + 1 for p in perm)}"
    return Lemma1Report(n, mode, certs, Fraction(1, 2), tol if mode == "float" else 0.0, mermin, reduction)


def _permute_mask(mask: int, perm: Sequence[int]) -> int:
    return sum(1 << perm[i] for i in range(len(perm)) if mask >> i & 1)


def _permuted(cert: Certificate, perm: Sequence[int], target: int) -> Certificate:
    values = {(_permute_mask(x, perm), _permute_mask(a, perm)): v for (x, a), v in cert.values.items()}
    info = dict(cert.info, symmetry="party permutation")
    return Certificate(cert.status, cert.optimal_value, values, cert.mode, cert.tolerance, cert.n, target, cert.max_residual, 0.0, info)


def write_certificates(report: Lemma1Report, outdir: str | Path) -> list[Path]:
    """One JSON file per input plus the exact witness behavior when available."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for x, cert in sorted(report.certificates.items()):
        stem = f"lemma1_n{report.n}_x{format_bits(x, report.n)}"
        witness_file = None
        if cert.witness is not None:
            witness_file = f"{stem}_witness.json"
            save_behavior(cert.witness, outdir / witness_file)
        payload = cert.to_json(witness_file)
        if x in report.reduction:
            payload["symmetry_reduction"] = report.reduction[x]
        path = outdir / f"{stem}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        written.append(path)
    return written
