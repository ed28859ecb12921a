"""Coefficient bookkeeping behind the bias of ``f`` at the input ``x_m``.

Summing ``P(a|x_m)`` over outcomes with ``n_-(a) = 4j + 2`` collects every
``k``-point correlator with the same integer weight.  Maximal violation
folds the correlators with ``k > (n-1)/2`` onto their complements, leaving
one coefficient per ``k <= (n-1)/2``:

* ``alpha_raw``: the weights themselves, by direct binomial sums;
* ``alpha_primed_closed``: the shifted, ``h_n``-oriented weights from a
  phase formula evaluated with residues mod 8;
* ``beta``: the signs produced by the positivity of two outcomes at the
  complemented input.

Every phase is an exact sign; nothing here touches floating point.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Union

import numpy as np

from .behavior import (
    Behavior,
    CorrelatorKey,
    CorrelatorRep,
    check_party_count,
    format_bits,
    _walsh_hadamard,
    popcount,
    to_correlators,
)
from .errors import IndexOutOfRange, MerminConditionsNotImposed, NonMerminInput
from .mermin import full_key, max_violation_constraints, mermin_sign, satisfies_folding
from .randomness import f_value, h_n

Correlators = Union[Behavior, CorrelatorRep, Mapping[CorrelatorKey, Fraction]]


@dataclass(frozen=True)
class CoefficientVector:
    n: int
    kind: str  # "AlphaRaw" | "AlphaPrimed" | "Beta"
    entries: tuple[int, ...]


@dataclass(frozen=True)
class CVector:
    n: int
    x_m: int
    entries: tuple[Fraction, ...]


def _check_index(n: int, i: int) -> None:
    check_party_count(n, odd=True, capped=False)
    if not 0 <= i <= (n - 1) // 2:
        raise IndexOutOfRange(f"index {i} outside 0..{(n - 1) // 2} for n={n}")


def _comb(n: int, k: int) -> int:
    return math.comb(n, k) if 0 <= k <= n else 0


# ---------------------------------------------------------------- alpha and beta


def alpha_raw(n: int, i: int) -> int:
    """``sum_r (-1)^r C(i, r) sum_j C(n - i, 4j + 2 - r)`` by direct summation."""
    _check_index(n, i)
    total = 0
    for r in range(i + 1):
        inner = sum(_comb(n - i, 4 * j + 2 - r) for j in range((n - i + r) // 4 + 1))
        total += (-1) ** r * math.comb(i, r) * inner
    return total


def _sqrt2_cos_quarter(m: int) -> int:
    """``sqrt(2) cos(m pi / 4)`` for odd ``m``, read off ``m mod 8``."""
    if m % 2 == 0:
        raise ValueError("only odd multiples of pi/4 give +/-1/sqrt(2)")
    return 1 if m % 8 in (1, 7) else -1


def alpha_primed_closed(n: int, i: int) -> int:
    """``2^((n-3)/2) (-2 cos((n-2i) pi/4) cos((n+4) pi/4))`` with the cosines taken as residue signs."""
    _check_index(n, i)
    # -2 cos(u) cos(v) = -(sqrt2 cos u)(sqrt2 cos v)
    phase = -_sqrt2_cos_quarter(n - 2 * i) * _sqrt2_cos_quarter(n + 4)
    return phase << ((n - 3) // 2)


def alpha_primed_from_raw(n: int, i: int) -> int:
    """``h_n (alpha_raw - [i = 0] 2^(n-2))``: the orientation and shift applied to the raw sums."""
    shift = 1 << (n - 2) if i == 0 else 0
    return h_n(n) * (alpha_raw(n, i) - shift)


def beta(n: int, i: int) -> int:
    """``(-1)^((n-i)/2)`` for odd ``i``, ``(-1)^(i/2)`` for even ``i``."""
    _check_index(n, i)
    half = (n - i) // 2 if i % 2 else i // 2
    return -1 if half % 2 else 1


def coefficient_vector(n: int, kind: str) -> CoefficientVector:
    funcs = {"AlphaRaw": alpha_raw, "AlphaPrimed": alpha_primed_closed, "Beta": beta}
    if kind not in funcs:
        raise ValueError(f"kind must be one of {sorted(funcs)}, got {kind!r}")
    return CoefficientVector(n, kind, tuple(funcs[kind](n, i) for i in range((n + 1) // 2)))


# ---------------------------------------------------------------- roots-of-unity filter


def _gauss_mul(u: tuple[int, int], v: tuple[int, int]) -> tuple[int, int]:
    return u[0] * v[0] - u[1] * v[1], u[0] * v[1] + u[1] * v[0]


def _one_plus_i_power(n: int) -> tuple[int, int]:
    """``(1 + i)^n`` as a Gaussian integer, from ``(1 + i)^2 = 2i``."""
    q, r = divmod(n, 2)
    # (2i)^q = 2^q i^q
    unit = [(1, 0), (0, 1), (-1, 0), (0, -1)][q % 4]
    base = (unit[0] << q, unit[1] << q)
    return _gauss_mul(base, (1, 1)) if r else base


def _filter_mod4(n: int, a: int) -> int:
    # terms k = 1, 3 are conjugate; k = 2 contributes (1 - 1)^n, nonzero only at n = 0
    i_pow = [(1, 0), (0, -1), (-1, 0), (0, 1)][a % 4]  # i^(-a)
    re = _gauss_mul(i_pow, _one_plus_i_power(n))[0]
    total = (1 << n) + 2 * re + ((-1) ** a if n == 0 else 0)
    q, rem = divmod(total, 4)
    assert rem == 0
    return q


@lru_cache(maxsize=None)
def _cyclotomic(r: int) -> tuple[int, ...]:
    """Coefficients (constant term first) of the ``r``-th cyclotomic polynomial."""
    num = [-1] + [0] * (r - 1) + [1]  # x^r - 1
    for d in range(1, r):
        if r % d == 0:
            num = _poly_divide_exact(num, list(_cyclotomic(d)))
    return tuple(num)


def _poly_divide_exact(num: list[int], den: list[int]) -> list[int]:
    num = list(num)
    out = [0] * (len(num) - len(den) + 1)
    for k in range(len(out) - 1, -1, -1):
        c = num[k + len(den) - 1]  # den is monic
        out[k] = c
        for j, d in enumerate(den):
            num[k + j] -= c * d
    assert not any(num), "inexact cyclotomic division"
    return out


def _reduce(p: list[int], mod: Sequence[int]) -> list[int]:
    deg = len(mod) - 1
    p = list(p)
    for k in range(len(p) - 1, deg - 1, -1):
        c = p[k]
        if c:
            for j, m in enumerate(mod):
                p[k - deg + j] -= c * m
    return (p + [0] * deg)[:deg]


def _mul_mod(u: list[int], v: list[int], mod: Sequence[int]) -> list[int]:
    prod = [0] * (len(u) + len(v) - 1)
    for i, a in enumerate(u):
        if a:
            for j, b in enumerate(v):
                prod[i + j] += a * b
    return _reduce(prod, mod)


def _pow_mod(base: list[int], e: int, mod: Sequence[int]) -> list[int]:
    result = _reduce([1], mod)
    while e:
        if e & 1:
            result = _mul_mod(result, base, mod)
        base = _mul_mod(base, base, mod)
        e >>= 1
    return result


def _filter_cyclotomic(n: int, r: int, a: int) -> int:
    """``(1/r) sum_k w^(-ka) (1 + w^k)^n`` in ``Z[w]``, ``w`` a primitive ``r``-th root of unity."""
    mod = _cyclotomic(r)
    acc = [0] * (len(mod) - 1)
    for k in range(r):
        term = _pow_mod(_reduce([1] + [0] * (k - 1) + [1] if k else [2], mod), n, mod)
        shift = [0] * ((-k * a) % r) + [1]
        term = _mul_mod(term, _reduce(shift, mod), mod)
        acc = [s + t for s, t in zip(acc, term)]
    if any(acc[1:]):
        raise ArithmeticError("roots-of-unity sum is not rational")
    q, rem = divmod(acc[0], r)
    if rem:
        raise ArithmeticError("roots-of-unity sum is not divisible by r")
    return q


def roots_filter(n: int, r: int, a: int) -> int:
    """``sum_j C(n, r j + a)`` from the roots-of-unity filter, in exact arithmetic.

    ``r = 4`` uses Gaussian integers; other ``r`` work in the ring of
    integers of the ``r``-th cyclotomic field.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if r < 1 or not 0 <= a < r:
        raise ValueError(f"need r >= 1 and 0 <= a < r, got r={r}, a={a}")
    if r == 1:
        return 1 << n
    if r == 4:
        return _filter_mod4(n, a)
    return _filter_cyclotomic(n, r, a)


# ---------------------------------------------------------------- c-vector and identities


def _as_values(source: Correlators) -> tuple[int | None, Mapping[CorrelatorKey, Fraction]]:
    if isinstance(source, Behavior):
        rep = to_correlators(source)
        return rep.n, rep.values
    if isinstance(source, CorrelatorRep):
        return source.n, source.values
    return None, source


def _check_conditions(n: int, values: Mapping[CorrelatorKey, Fraction]) -> None:
    """Full correlators at their extremal values and every folding relation in place."""
    rep = values if isinstance(values, CorrelatorRep) else CorrelatorRep(n, dict(values))
    cons = max_violation_constraints(n)
    missed = [x for x, s in cons.required.items() if rep.values.get(full_key(n, x)) != s]
    if missed:
        raise MerminConditionsNotImposed(
            f"{len(missed)} full correlators off their extremal values, e.g. <{format_bits(missed[0], n)}>"
        )
    ok, broken = satisfies_folding(rep)
    if not ok:
        (su, xu), s, (sv, xv) = broken[0]
        raise MerminConditionsNotImposed(
            f"{len(broken)} folding relations fail, e.g. <{format_bits(xu, n)}>_{format_bits(su, n)}"
            f" != {s:+d} <{format_bits(xv, n)}>_{format_bits(sv, n)}"
        )


def _resolve(source: Correlators, n: int | None) -> tuple[int, Mapping[CorrelatorKey, Fraction]]:
    found, values = _as_values(source)
    n = found if n is None else n
    if n is None:
        raise ValueError("pass n with a bare correlator mapping")
    check_party_count(n, odd=True)
    return n, values


def _check_input(n: int, x_m: int, *, positive: bool = False) -> None:
    if not 0 <= x_m < 1 << n or popcount(x_m) % 2 == 0:
        raise NonMerminInput(f"{format_bits(x_m, n)} is not an odd-parity input")
    if positive and mermin_sign(x_m) != 1:
        raise NonMerminInput(f"the folded coefficients assume <x_m> = +1; <{format_bits(x_m, n)}> = -1")


def c_vector(source: Correlators, x_m: int, n: int | None = None) -> CVector:
    """``c_k = sum_{|S| = k} <(x_m)_S>`` for ``k = 0 .. (n-1)/2`` (``c_0 = 1``)."""
    n, values = _resolve(source, n)
    _check_input(n, x_m)
    entries = [Fraction(1)]
    for k in range(1, (n + 1) // 2):
        total = Fraction(0)
        for parties in combinations(range(n), k):
            s = sum(1 << i for i in parties)
            total += Fraction(values[(s, x_m & s)])
        entries.append(total)
    return CVector(n, x_m, tuple(entries))


def _row(n: int, values: Mapping[CorrelatorKey, Fraction], x: int) -> tuple[Fraction, ...]:
    """``P(.|x) = 2^-n sum_S chi_S(a) <x_S>``; only the correlators of ``x`` enter."""
    size = 1 << n
    w = [Fraction(1)] + [Fraction(values[(s, x & s)]) for s in range(1, size)]
    den = math.lcm(*(v.denominator for v in w))
    ints = np.array([[int(v * den) for v in w]], dtype=object)
    out = _walsh_hadamard(ints, n)[0]
    return tuple(Fraction(int(v), den * size) for v in out)


def compact_identity_check(source: Correlators, x_m: int, n: int | None = None) -> Fraction:
    """``h_n (P(f = +1 | x_m) - 1/2) - 2^-(n-1) alpha' . c``; zero on Mermin-conditioned correlators.

    Positivity is not required: the identity is linear in the correlators.
    It needs ``<x_m> = +1``; inputs with ``<x_m> = -1`` fold with the
    opposite sign and raise ``NonMerminInput``.
    """
    n, values = _resolve(source, n)
    _check_input(n, x_m, positive=True)
    _check_conditions(n, values)
    row = _row(n, values, x_m)
    p_plus = sum((p for a, p in enumerate(row) if f_value(a) == 1), Fraction(0))
    c = c_vector(values, x_m, n).entries
    dot = sum((alpha_primed_closed(n, i) * ci for i, ci in enumerate(c)), Fraction(0))
    return h_n(n) * (p_plus - Fraction(1, 2)) - dot / (1 << (n - 1))


def swapped_positivity_identity_check(source: Correlators, x_m: int | None = None, n: int | None = None) -> Fraction:
    """``2^(n-1) [P(e_j | xbar) + P(~e_j | xbar)] - beta . c(x_m)`` for a weight-one ``x_m``.

    ``j`` is the party with ``x_m = 1``; ``e_j`` is the outcome with ``-1``
    at ``j`` alone and ``~e_j`` its global flip; ``xbar`` is the bitwise
    complement of ``x_m``.  Default ``x_m = (0, ..., 0, 1)``.
    """
    n, values = _resolve(source, n)
    full = (1 << n) - 1
    if x_m is None:
        x_m = 1 << (n - 1)
    _check_input(n, x_m)
    if popcount(x_m) != 1:
        raise NonMerminInput(f"swapped-input identity is stated for weight-one inputs, got {format_bits(x_m, n)}")
    _check_conditions(n, values)
    swapped = full ^ x_m
    row = _row(n, values, swapped)
    lhs = (1 << (n - 1)) * (row[x_m] + row[full ^ x_m])
    c = c_vector(values, x_m, n).entries
    return lhs - sum((beta(n, i) * ci for i, ci in enumerate(c)), Fraction(0))


# ---------------------------------------------------------------- export

CSV_COLUMNS = ("n", "i", "alpha_raw", "alpha_primed", "beta")


def coefficient_rows(n_values: Sequence[int]) -> list[dict[str, int]]:
    rows = []
    for n in n_values:
        for i in range((n + 1) // 2):
            rows.append(
                {"n": n, "i": i, "alpha_raw": alpha_raw(n, i), "alpha_primed": alpha_primed_closed(n, i), "beta": beta(n, i)}
            )
    return rows


def coefficients_csv(n_values: Sequence[int]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(coefficient_rows(n_values))
    return buf.getvalue()


def write_coefficients_csv(n_values: Sequence[int], path: str | Path) -> None:
    Path(path).write_text(coefficients_csv(n_values), encoding="utf-8")
