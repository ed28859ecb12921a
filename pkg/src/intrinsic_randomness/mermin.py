"""Mermin operators built from the CHSH recursion, and the maximal-violation conditions."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .behavior import (
    Behavior,
    CorrelatorKey,
    CorrelatorRep,
    check_party_count,
    correlator_keys,
    popcount,
)
from .errors import DimensionMismatch

# CHSH on inputs 00, 01, 10, 11 (party-1 bit first); this sign pattern
# makes the recursion reproduce <001> + <010> + <100> - <111> at n = 3.
_CHSH = {0b00: Fraction(1), 0b10: Fraction(1), 0b01: Fraction(1), 0b11: Fraction(-1)}


@dataclass(frozen=True, eq=False)
class MerminExpansion:
    """Coefficients of the full correlators ``<x_1 ... x_n>`` in ``M_n``."""

    n: int
    coeffs: Mapping[int, Fraction]

    def coefficient(self, x: int) -> Fraction:
        return self.coeffs.get(x, Fraction(0))

    def support(self) -> list[int]:
        return sorted(x for x, c in self.coeffs.items() if c != 0)

    def l1_norm(self) -> Fraction:
        return sum((abs(c) for c in self.coeffs.values()), Fraction(0))


@dataclass(frozen=True, eq=False)
class MerminConstraintSet:
    """Required extremal values of the odd-parity full correlators."""

    n: int
    required: Mapping[int, int]


@lru_cache(maxsize=None)
def _expand(n: int) -> tuple[tuple[int, Fraction], ...]:
    if n == 2:
        return tuple(sorted(_CHSH.items()))
    prev = dict(_expand(n - 1))
    full = (1 << (n - 1)) - 1
    swapped = {x ^ full: c for x, c in prev.items()}
    last = 1 << (n - 1)
    half = Fraction(1, 2)
    out: dict[int, Fraction] = {}
    for x in range(1 << (n - 1)):
        m, ms = prev.get(x, Fraction(0)), swapped.get(x, Fraction(0))
        # M_n = 1/2 M_{n-1} (A_n^0 + A_n^1) + 1/2 M'_{n-1} (A_n^0 - A_n^1)
        out[x] = half * (m + ms)
        out[x | last] = half * (m - ms)
    return tuple(sorted((x, c) for x, c in out.items() if c != 0))


def recursion_expansion(n: int) -> MerminExpansion:
    """``M_n`` exactly as the recursion from CHSH produces it, with its 1/2 factors."""
    check_party_count(n)
    return MerminExpansion(n, dict(_expand(n)))


def expand_mermin(n: int) -> MerminExpansion:
    """Full-correlator expansion of the Mermin operator.

    Odd ``n``: the recursion output is normalized so that the coefficient of
    ``0...01`` is +1.  For ``n = 1 mod 4`` the recursion lands on even-parity
    inputs; complementing every input (the primed swap on all parties) moves
    it back to odd parity first.  Even ``n`` returns the recursion unchanged.
    """
    check_party_count(n)
    coeffs = dict(_expand(n))
    if n % 2 == 1:
        full = (1 << n) - 1
        if any(popcount(x) % 2 == 0 for x in coeffs):
            coeffs = {x ^ full: c for x, c in coeffs.items()}
        scale = 1 / coeffs[1 << (n - 1)]
        coeffs = {x: c * scale for x, c in coeffs.items()}
    return MerminExpansion(n, coeffs)


def mermin_sign(x: int) -> int:
    """``(-1)^((k-1)/2)`` for an odd-parity input with ``k`` ones."""
    k = popcount(x)
    if k % 2 == 0:
        raise ValueError(f"input {x:b} has even parity")
    return 1 if (k - 1) // 2 % 2 == 0 else -1


def mermin_inputs(n: int) -> list[int]:
    """Odd-parity input masks, in increasing order."""
    return [x for x in range(1 << n) if popcount(x) % 2 == 1]


def mermin_value(b: Behavior, expansion: MerminExpansion | None = None) -> Fraction:
    """``sum_x coeff(x) <x>`` evaluated directly on the table."""
    if expansion is None:
        expansion = expand_mermin(b.n)
    elif expansion.n != b.n:
        raise DimensionMismatch(f"expansion is for n={expansion.n}, behavior has n={b.n}")
    total = Fraction(0)
    for x, c in expansion.coeffs.items():
        total += c * full_correlator(b, x)
    return total


def full_correlator(b: Behavior, x: int) -> Fraction:
    full = (1 << b.n) - 1
    return sum(
        (v if popcount(a & full) % 2 == 0 else -v for a, v in enumerate(b.table[x])),
        Fraction(0),
    )


def algebraic_max(n: int) -> int:
    check_party_count(n, odd=True)
    value = 1 << (n - 1)
    assert expand_mermin(n).l1_norm() == value
    return value


def max_violation_constraints(n: int) -> MerminConstraintSet:
    check_party_count(n, odd=True)
    return MerminConstraintSet(n, {x: mermin_sign(x) for x in mermin_inputs(n)})


def satisfies_max_violation(b: Behavior) -> tuple[bool, list[int]]:
    """Whether every odd-parity full correlator sits at its extremal value; lists the misses."""
    cons = max_violation_constraints(b.n)
    violated = [x for x, s in cons.required.items() if full_correlator(b, x) != s]
    return not violated, violated


# ---------------------------------------------------------------- conditioned correlators


def full_key(n: int, x: int) -> CorrelatorKey:
    return ((1 << n) - 1, x)


def free_correlator_keys(n: int) -> list[CorrelatorKey]:
    """Correlators left unconstrained by the maximal-violation conditions."""
    full = (1 << n) - 1
    return [k for k in correlator_keys(n) if not (k[0] == full and popcount(k[1]) % 2 == 1)]


def mermin_conditioned(n: int, free: Mapping[CorrelatorKey, Fraction]) -> CorrelatorRep:
    """Correlator vector with the conditions imposed and ``free`` filling the rest."""
    cons = max_violation_constraints(n)
    values = {k: Fraction(free.get(k, 0)) for k in free_correlator_keys(n)}
    extra = set(free) - set(values)
    if extra:
        raise DimensionMismatch(f"keys {sorted(extra)[:3]} are fixed by the conditions")
    for x, s in cons.required.items():
        values[full_key(n, x)] = Fraction(s)
    return CorrelatorRep(n, values)


def random_mermin_correlators(
    n: int, rng: np.random.Generator, denominator: int = 12, scale: Fraction = Fraction(1)
) -> CorrelatorRep:
    """Folding relations imposed, free class values drawn uniformly from the grid ``scale * j / denominator``.

    No positivity filter: the vector need not come from a behavior.
    """
    keys = folded_free_keys(n)
    nums = rng.integers(-denominator, denominator + 1, size=len(keys))
    free = {k: scale * Fraction(int(v), denominator) for k, v in zip(keys, nums)}
    return mermin_folded(n, free)


def is_mermin_conditioned(c: CorrelatorRep) -> bool:
    cons = max_violation_constraints(c.n)
    return all(c.values.get(full_key(c.n, x)) == s for x, s in cons.required.items())


# ---------------------------------------------------------------- folding relations

_ONE = (0, 0)  # the empty correlator, identically 1


def folding_relations(n: int) -> list[tuple[CorrelatorKey, int, CorrelatorKey]]:
    """``<x_S> = s_x <x_{S^c}>`` for every odd-parity ``x`` and every subset ``S``.

    Maximal violation puts ``<x> = s_x`` with nonnegative probabilities,
    so outcomes with product ``-s_x`` are absent and each correlator of
    ``x`` equals ``s_x`` times its complement.  The empty subset is keyed
    ``(0, 0)`` and stands for the constant 1.
    """
    cons = max_violation_constraints(n)
    full = (1 << n) - 1
    out = []
    for x, s in cons.required.items():
        for sub in range(1 << n):
            comp = full ^ sub
            if sub < comp:
                out.append(((sub, x & sub), s, (comp, x & comp)))
    return out


@lru_cache(maxsize=None)
def _folding_classes(n: int) -> tuple[dict, dict]:
    """Signed union-find over correlator keys: ``key -> (root, sign)`` and the set of roots forced to 0."""
    parent: dict[CorrelatorKey, tuple[CorrelatorKey, int]] = {k: (k, 1) for k in correlator_keys(n)}
    parent[_ONE] = (_ONE, 1)
    zero: set[CorrelatorKey] = set()

    def find(k):
        root, sign = k, 1
        while parent[root][0] != root:
            sign *= parent[root][1]
            root = parent[root][0]
        # path compression
        node, acc = k, sign
        while parent[node][0] != root:
            nxt, s = parent[node]
            parent[node] = (root, acc)
            acc *= s
            node = nxt
        return root, sign

    for u, s, v in folding_relations(n):
        ru, su = find(u)
        rv, sv = find(v)
        # u = s v  ->  su ru = s sv rv
        rel = su * s * sv
        if ru == rv:
            if rel == -1:
                zero.add(ru)
            continue
        if rv == _ONE:
            ru, rv = rv, ru
        parent[rv] = (ru, rel)
        if rv in zero:
            zero.discard(rv)
            zero.add(ru)
    classes = {k: find(k) for k in parent}
    roots_zero = {find(r)[0] for r in zero}
    return classes, roots_zero


def folded_free_keys(n: int) -> list[CorrelatorKey]:
    """One representative per correlator class left free by the folding relations."""
    check_party_count(n, odd=True)
    classes, zero = _folding_classes(n)
    roots = {r for r, _ in classes.values()}
    return sorted(r for r in roots if r != _ONE and r not in zero)


def mermin_folded(n: int, free: Mapping[CorrelatorKey, Fraction]) -> CorrelatorRep:
    """Correlators obeying every folding relation; ``free`` may value any key of a free class."""
    classes, zero = _folding_classes(n)
    allowed = set(folded_free_keys(n))
    roots: dict[CorrelatorKey, Fraction] = {}
    for k, v in free.items():
        if k not in classes or classes[k][0] not in allowed:
            raise DimensionMismatch(f"key {k} is fixed by the folding relations")
        root, sign = classes[k]
        value = sign * Fraction(v)
        if roots.setdefault(root, value) != value:
            raise DimensionMismatch(f"key {k} conflicts with another key of its class")
    values = {}
    for k in correlator_keys(n):
        root, sign = classes[k]
        if root == _ONE:
            values[k] = Fraction(sign)
        elif root in zero:
            values[k] = Fraction(0)
        else:
            values[k] = sign * roots.get(root, Fraction(0))
    return CorrelatorRep(n, values)


def satisfies_folding(c: CorrelatorRep) -> tuple[bool, list[tuple[CorrelatorKey, int, CorrelatorKey]]]:
    def val(k: CorrelatorKey) -> Fraction:
        return Fraction(1) if k == _ONE else Fraction(c.values.get(k, 0))

    missed = [(u, s, v) for u, s, v in folding_relations(c.n) if val(u) != s * val(v)]
    return not missed, missed
