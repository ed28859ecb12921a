"""N-party two-input/two-output behaviors in table and correlator form.

Inputs and outcomes are stored as integer bit masks: party ``i`` (1-based)
owns bit ``i - 1``.  An input bit is the measurement label; an outcome bit
of 0 means ``+1`` and 1 means ``-1``.  Serialized bitstrings list the bits
in party order, so ``"001"`` is ``x = (0, 0, 1)``.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Union

import numpy as np

from .config import limits
from .errors import (
    DimensionMismatch,
    EvenPartyCount,
    NegativeProbability,
    NotNormalized,
    PartyCountOutOfRange,
    SignallingDetected,
    WeightSumMismatch,
)

Rational = Union[int, Fraction]
CorrelatorKey = tuple[int, int]  # (party subset mask, input bits on that subset)


# ---------------------------------------------------------------- bit strings


def popcount(v: int) -> int:
    return bin(v).count("1")


def parse_bits(s: str) -> int:
    """``"001"`` -> mask with bit 2 set (party 3 has bit 1)."""
    if not s or any(ch not in "01" for ch in s):
        raise ValueError(f"not a bitstring: {s!r}")
    return sum(1 << i for i, ch in enumerate(s) if ch == "1")


def format_bits(mask: int, n: int) -> str:
    return "".join("1" if mask >> i & 1 else "0" for i in range(n))


def outcome_signs(a: int, n: int) -> tuple[int, ...]:
    return tuple(-1 if a >> i & 1 else 1 for i in range(n))


def outcome_from_signs(signs: Sequence[int]) -> int:
    if any(s not in (1, -1) for s in signs):
        raise ValueError(f"outcomes must be +1/-1, got {tuple(signs)}")
    return sum(1 << i for i, s in enumerate(signs) if s == -1)


def input_from_bits(bits: Sequence[int]) -> int:
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"inputs must be 0/1, got {tuple(bits)}")
    return sum(1 << i for i, b in enumerate(bits) if b)


def parity(x: int) -> int:
    return popcount(x) & 1


def char_sign(a: int, subset: int) -> int:
    """Product of the +/-1 outcomes of the parties in ``subset``."""
    return -1 if popcount(a & subset) & 1 else 1


def check_party_count(n: int, *, odd: bool = False, capped: bool = True) -> None:
    """``capped=False`` skips the table-size cap for closed-form quantities."""
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise PartyCountOutOfRange(f"need at least 2 parties, got {n!r}")
    if capped and n > limits().max_parties:
        raise PartyCountOutOfRange(f"n={n} exceeds the cap of {limits().max_parties}")
    if odd and n % 2 == 0:
        raise EvenPartyCount(f"operation requires an odd number of parties, got {n}")


def correlator_keys(n: int) -> list[CorrelatorKey]:
    """All ``3**n - 1`` (subset, inputs) pairs with a non-empty subset."""
    keys = []
    for subset in range(1, 1 << n):
        sub = subset
        while True:
            keys.append((subset, sub))
            if sub == 0:
                break
            sub = (sub - 1) & subset
    keys.sort()
    return keys


# ---------------------------------------------------------------- transforms


def _common_denominator(values: Iterable[Fraction]) -> int:
    return reduce(math.lcm, (Fraction(v).denominator for v in values), 1)


def exact_sum(values: Iterable[Rational]) -> Fraction:
    """Sum of rationals over one common denominator (much faster than repeated ``Fraction`` addition)."""
    vals = [v if type(v) is Fraction else Fraction(v) for v in values]
    den = reduce(math.lcm, {v.denominator for v in vals}, 1)
    return Fraction(sum(v.numerator * (den // v.denominator) for v in vals), den)


def _walsh_hadamard(mat: np.ndarray, n: int) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 1 (object ints)."""
    out = mat.copy()
    h = 1
    idx = np.arange(1 << n)
    while h < (1 << n):
        lo = idx[(idx & h) == 0]
        hi = lo + h
        u = out[:, lo]
        v = out[:, hi]
        out[:, lo] = u + v
        out[:, hi] = u - v
        h <<= 1
    return out


def _walsh_table(table: Sequence[Sequence[Fraction]], n: int) -> tuple[np.ndarray, int]:
    """Per-input transform ``W[x, S] = sum_a P(a|x) chi_S(a)`` as ints over a denominator."""
    den = _common_denominator(v for row in table for v in row)
    ints = np.array(
        [[int(v * den) for v in row] for row in table], dtype=object
    ).reshape(1 << n, 1 << n)
    return _walsh_hadamard(ints, n), den


# ---------------------------------------------------------------- behaviors


@dataclass(frozen=True)
class Behavior:
    """Conditional table ``P(a|x)``; ``table[x][a]`` with exact rational entries."""

    n: int
    table: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        size = 1 << self.n
        if len(self.table) != size or any(len(row) != size for row in self.table):
            raise DimensionMismatch(f"table must be {size}x{size} for n={self.n}")

    @classmethod
    def from_rows(cls, n: int, rows: Iterable[Iterable[Rational]]) -> Behavior:
        return cls(n, tuple(tuple(Fraction(v) for v in row) for row in rows))

    def p(self, x: int, a: int) -> Fraction:
        return self.table[x][a]

    def row(self, x: int) -> tuple[Fraction, ...]:
        return self.table[x]

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for row in self.table for v in row)

    def is_normalized(self) -> bool:
        return all(sum(row) == 1 for row in self.table)

    def signalling_violations(self, tolerance: Rational = 0) -> list[tuple[int, int, Fraction]]:
        """List ``(subset, x, mismatch)`` where a subset marginal depends on outside inputs.

        A subset marginal over parties ``S`` is fixed by the transform values
        ``W[x, T]`` for ``T`` inside ``S``; those must not move when the
        inputs outside ``T`` change.
        """
        w, den = _walsh_table(self.table, self.n)
        bad = []
        tol = Fraction(tolerance)
        for x in range(1 << self.n):
            for subset in range(1 << self.n):
                ref = w[x & subset, subset]
                diff = Fraction(int(w[x, subset] - ref), den)
                if abs(diff) > tol:
                    bad.append((subset, x, diff))
        return bad

    def is_no_signalling(self, tolerance: Rational = 0) -> bool:
        return not self.signalling_violations(tolerance)

    def validate(self) -> None:
        """Raise unless the table is a nonnegative, normalized, no-signalling behavior."""
        if not self.is_nonnegative():
            raise NegativeProbability("behavior has negative entries")
        if not self.is_normalized():
            raise NotNormalized("some input row does not sum to 1")
        bad = self.signalling_violations()
        if bad:
            raise SignallingDetected(f"{len(bad)} marginal mismatches, first: {bad[0]}")

    def prob_where(self, x: int, predicate: Callable[[int], bool]) -> Fraction:
        return exact_sum(v for a, v in enumerate(self.table[x]) if predicate(a))


@dataclass(frozen=True, eq=False)
class CorrelatorRep:
    """Correlators ``<prod_{i in S} A_i^{(x_i)}>`` keyed by ``(S, x_S)``; the empty set is 1."""

    n: int
    values: Mapping[CorrelatorKey, Fraction]

    def __post_init__(self) -> None:
        for (subset, xs), v in self.values.items():
            if subset == 0 or xs & ~subset or subset >> self.n:
                raise DimensionMismatch(f"bad correlator key {(subset, xs)} for n={self.n}")
            if not -1 <= v <= 1:
                raise ValueError(f"correlator {(subset, xs)} = {v} outside [-1, 1]")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CorrelatorRep):
            return NotImplemented
        return self.n == other.n and dict(self.values) == dict(other.values)

    def __getitem__(self, key: CorrelatorKey) -> Fraction:
        return self.values[key]

    def at(self, parties: Iterable[int], x: int) -> Fraction:
        """Correlator of the 1-based ``parties`` with inputs read off the mask ``x``."""
        subset = sum(1 << (i - 1) for i in parties)
        if subset == 0:
            return Fraction(1)
        return self.values[(subset, x & subset)]

    def is_complete(self) -> bool:
        return len(self.values) == 3**self.n - 1


def to_correlators(b: Behavior) -> CorrelatorRep:
    """Correlator form of a normalized no-signalling behavior."""
    if not b.is_normalized():
        raise NotNormalized("to_correlators needs a normalized behavior")
    bad = b.signalling_violations()
    if bad:
        raise SignallingDetected(f"{len(bad)} marginal mismatches, first: {bad[0]}")
    w, den = _walsh_table(b.table, b.n)
    values = {(s, xs): Fraction(int(w[xs, s]), den) for s, xs in correlator_keys(b.n)}
    return CorrelatorRep(b.n, values)


def table_from_correlators(
    n: int, values: Mapping[CorrelatorKey, Rational]
) -> tuple[tuple[Fraction, ...], ...]:
    """``P(a|x) = 2^-n sum_S chi_S(a) <x_S>`` without any positivity check."""
    size = 1 << n
    den = _common_denominator(values.values())
    w = np.empty((size, size), dtype=object)
    for x in range(size):
        w[x, 0] = den
        for s in range(1, size):
            w[x, s] = int(Fraction(values[(s, x & s)]) * den)
    ints = _walsh_hadamard(w, n)
    scale = den * size
    return tuple(tuple(Fraction(int(v), scale) for v in ints[x]) for x in range(size))


def from_correlators(c: CorrelatorRep) -> Behavior:
    if not c.is_complete():
        raise DimensionMismatch(
            f"need all {3**c.n - 1} correlators, got {len(c.values)}"
        )
    b = Behavior(c.n, table_from_correlators(c.n, c.values))
    if not b.is_nonnegative():
        neg = [(x, a) for x in range(1 << c.n) for a in range(1 << c.n) if b.table[x][a] < 0]
        raise NegativeProbability(
            f"correlators lie outside the no-signalling polytope; "
            f"{len(neg)} negative entries, first (x, a) = {neg[0]}"
        )
    return b


# ---------------------------------------------------------------- constructors


def uniform_behavior(n: int) -> Behavior:
    check_party_count(n)
    size = 1 << n
    row = (Fraction(1, size),) * size
    return Behavior(n, (row,) * size)


def ghz_row(n: int, x: int) -> tuple[Fraction, ...]:
    """``P_ghz(.|x)``: for odd-parity ``x`` with ``k`` ones, uniform on outcomes of product
    ``(-1)**((k-1)/2)``; uniform on all outcomes for even-parity ``x``."""
    check_party_count(n, odd=True)
    size = 1 << n
    k = popcount(x)
    if k % 2 == 0:
        return (Fraction(1, size),) * size
    half = Fraction(1, size >> 1)
    want = 1 if (k - 1) // 2 % 2 == 0 else -1
    return tuple(half if char_sign(a, size - 1) == want else Fraction(0) for a in range(size))


def ghz_behavior(n: int) -> Behavior:
    """Maximal Mermin violator: the statistics of the GHZ state under X/Y measurements."""
    check_party_count(n, odd=True)
    return Behavior(n, tuple(ghz_row(n, x) for x in range(1 << n)))


Assignment = Union[Sequence[Sequence[int]], Sequence[Mapping[int, int]], Sequence[Callable[[int], int]]]


def deterministic_behavior(n: int, assignment: Assignment) -> Behavior:
    """Local deterministic point; ``assignment[i]`` maps party ``i+1``'s input bit to +/-1."""
    check_party_count(n)
    if len(assignment) != n:
        raise DimensionMismatch(f"need {n} party strategies, got {len(assignment)}")

    def out(i: int, bit: int) -> int:
        rule = assignment[i]
        return rule(bit) if callable(rule) else rule[bit]

    size = 1 << n
    rows = []
    for x in range(size):
        a = outcome_from_signs([out(i, x >> i & 1) for i in range(n)])
        rows.append(tuple(Fraction(1) if j == a else Fraction(0) for j in range(size)))
    return Behavior(n, tuple(rows))


def mix(components: Sequence[tuple[Rational, Behavior]]) -> Behavior:
    """Convex combination of behaviors."""
    if not components:
        raise WeightSumMismatch("empty mixture")
    n = components[0][1].n
    if any(b.n != n for _, b in components):
        raise DimensionMismatch("mixture components have different party counts")
    weights = [Fraction(w) for w, _ in components]
    if any(w < 0 for w in weights):
        raise WeightSumMismatch(f"negative weight in {weights}")
    if sum(weights) != 1:
        raise WeightSumMismatch(f"weights sum to {sum(weights)}, not 1")
    size = 1 << n
    rows = tuple(
        tuple(sum((w * b.table[x][a] for w, (_, b) in zip(weights, components)), Fraction(0)) for a in range(size))
        for x in range(size)
    )
    return Behavior(n, rows)


# ---------------------------------------------------------------- JSON


def format_fraction(v: Rational) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def parse_fraction(s: str | int) -> Fraction:
    return Fraction(s)


def behavior_to_json(b: Behavior) -> dict:
    entries = [
        {"x": format_bits(x, b.n), "a": format_bits(a, b.n), "p": format_fraction(v)}
        for x, row in enumerate(b.table)
        for a, v in enumerate(row)
        if v != 0
    ]
    return {"n": b.n, "entries": entries}


def behavior_from_json(payload: Mapping) -> Behavior:
    n = payload["n"]
    if not isinstance(n, int):
        raise ValueError(f"'n' must be an integer, got {n!r}")
    check_party_count(n)
    size = 1 << n
    rows = [[Fraction(0)] * size for _ in range(size)]
    for entry in payload["entries"]:
        x, a = entry["x"], entry["a"]
        if len(x) != n or len(a) != n:
            raise ValueError(f"bitstrings must have length {n}: {entry}")
        rows[parse_bits(x)][parse_bits(a)] = parse_fraction(entry["p"])
    return Behavior.from_rows(n, rows)


def save_behavior(b: Behavior, path: str | Path) -> None:
    Path(path).write_text(json.dumps(behavior_to_json(b), indent=1) + "\n", encoding="utf-8")


def load_behavior(path: str | Path) -> Behavior:
    return behavior_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
