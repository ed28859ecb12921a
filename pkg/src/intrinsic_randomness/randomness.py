"""Guessing probabilities of the outcome bit ``f`` and audits of preparations."""

from __future__ import annotations

import json
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Union

import numpy as np

from .behavior import (
    Behavior,
    behavior_from_json,
    behavior_to_json,
    check_party_count,
    exact_sum,
    format_bits,
    format_fraction,
    from_correlators,
    load_behavior,
    outcome_from_signs,
    parse_bits,
    parse_fraction,
    popcount,
)
from .errors import DimensionMismatch, NegativeProbability, NonMerminInput, NotMaximallyViolating

Outcome = Union[int, Sequence[int]]


def _mask(a: Outcome) -> int:
    return a if isinstance(a, (int, np.integer)) else outcome_from_signs(a)


def f_value(a: Outcome) -> int:
    """+1 when the number of -1 outcomes is 2 mod 4, else -1."""
    return 1 if popcount(int(_mask(a))) % 4 == 2 else -1


def h_n(n: int) -> int:
    """Sign ``sqrt(2) cos(pi (n + 4) / 4)`` for odd ``n``, from ``n mod 8``."""
    check_party_count(n, odd=True, capped=False)
    return 1 if n % 8 in (3, 5) else -1


@dataclass(frozen=True)
class GuessProb:
    value: Fraction
    argmax_outcome: int


def pushforward(g: Callable[[int], Hashable], x: int, b: Behavior) -> dict[Hashable, Fraction]:
    out: dict[Hashable, Fraction] = {}
    for a, p in enumerate(b.table[x]):
        k = g(a)
        out[k] = out.get(k, Fraction(0)) + p
    return out


def guess_from_row(g: Callable[[int], Hashable], row: Sequence[Fraction]) -> GuessProb:
    """``max_k`` of the pushforward of one conditional distribution; ties go to the larger label."""
    parts: dict[Hashable, list[Fraction]] = {}
    for a, p in enumerate(row):
        parts.setdefault(g(a), []).append(p)
    dist = {k: exact_sum(v) for k, v in parts.items()}
    best = max(dist, key=lambda k: (dist[k], k))
    return GuessProb(dist[best], best)


def observed_guessing(g: Callable[[int], Hashable], x: int, b: Behavior) -> GuessProb:
    """``max_k P(g(a) = k | x)`` over the image of ``g``; ties go to the larger label (+1 first)."""
    return guess_from_row(g, b.table[x])


def prob_f(b: Behavior, x: int, value: int) -> Fraction:
    return b.prob_where(x, lambda a: f_value(a) == value)


def ghz_guessing_formula(n: int) -> Fraction:
    check_party_count(n, odd=True, capped=False)
    return Fraction(1, 2) + Fraction(1, 2 ** ((n + 1) // 2))


def intrinsic_guessing_max_violation(x: int, b: Behavior) -> GuessProb:
    """Guessing probability of ``f`` against no-signalling preparations, for maximal violators.

    Every preparation of a maximal violator is itself a maximal violator, so
    if ``f`` leans toward one fixed value ``s`` on all of them the optimal
    guess is ``s`` for each component and the mixture returns
    ``P(f = s | x)``.  ``s`` is ``h_n`` on inputs whose full correlator is
    +1; on the others the support forces an odd number of -1 outcomes and
    ``f = -1`` deterministically.
    """
    from .mermin import satisfies_max_violation

    if popcount(x) % 2 == 0 or not 0 <= x < 1 << b.n:
        raise NonMerminInput(f"input {format_bits(x, b.n)} does not appear in the Mermin operator")
    ok, missed = satisfies_max_violation(b)
    if not ok:
        raise NotMaximallyViolating(
            f"{len(missed)} Mermin conditions fail, e.g. <{format_bits(missed[0], b.n)}>"
        )
    return intrinsic_from_row(b.n, x, b.table[x])


def lemma1_side(n: int, x: int) -> int:
    """Value ``f`` leans toward at a Mermin input of a maximal violator."""
    from .mermin import mermin_sign

    return h_n(n) if mermin_sign(x) == 1 else -1


def intrinsic_from_row(n: int, x: int, row: Sequence[Fraction]) -> GuessProb:
    """``P(f = s | x)`` on one row, ``s = lemma1_side(n, x)``; the caller owns the maximal-violation premise."""
    side = lemma1_side(n, x)
    return GuessProb(exact_sum(p for a, p in enumerate(row) if f_value(a) == side), side)


# ---------------------------------------------------------------- preparations


@dataclass(frozen=True)
class Component:
    label: Hashable
    weights: Mapping[int, Fraction]  # p(e|x) per input mask
    behavior: Behavior


@dataclass(frozen=True)
class Decomposition:
    components: tuple[Component, ...]


@dataclass
class AuditReport:
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def audit_decomposition(d: Decomposition, target: Behavior, epsilon: Fraction | int = 0) -> AuditReport:
    """Check a preparation ``P(a|x) = sum_e p(e|x) P_e(a|x)`` of ``target``.

    Checks: the weights are normalized and reproduce ``target`` entrywise;
    every ``p(e|x)`` clears the floor (strictly positive when ``epsilon`` is
    0); and, when the target is a maximal Mermin violator, so is every
    component carrying weight.
    """
    from .mermin import satisfies_max_violation

    n = target.n
    size = 1 << n
    eps = Fraction(epsilon)
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    if not d.components:
        raise DimensionMismatch("decomposition has no components")
    for comp in d.components:
        if comp.behavior.n != n:
            raise DimensionMismatch(f"component {comp.label!r} has n={comp.behavior.n}, target has n={n}")
        extra = set(comp.weights) - set(range(size))
        if extra:
            raise DimensionMismatch(f"component {comp.label!r} has weights for unknown inputs {sorted(extra)}")

    report = AuditReport()
    w = {(c.label, x): Fraction(c.weights.get(x, 0)) for c in d.components for x in range(size)}

    for comp in d.components:
        b = comp.behavior
        if not b.is_nonnegative() or not b.is_normalized() or not b.is_no_signalling():
            report.failures.append(f"component {comp.label!r} is not a valid no-signalling behavior")

    for x in range(size):
        total = sum(w[(c.label, x)] for c in d.components)
        if total != 1:
            report.failures.append(f"normalization: sum_e p(e|{format_bits(x, n)}) = {total}, not 1")
        for a in range(size):
            mixed = sum(w[(c.label, x)] * c.behavior.table[x][a] for c in d.components)
            if mixed != target.table[x][a]:
                report.failures.append(
                    f"mixture: P({format_bits(a, n)}|{format_bits(x, n)}) = {mixed}, target {target.table[x][a]}"
                )
                break

    for comp in d.components:
        for x in range(size):
            p = w[(comp.label, x)]
            low = p <= 0 if eps == 0 else p < eps
            if low:
                floor = "> 0" if eps == 0 else f">= {eps}"
                report.failures.append(
                    f"freedom of choice: p({comp.label!r}|{format_bits(x, n)}) = {p}, need {floor}"
                )

    if n % 2 == 1 and satisfies_max_violation(target)[0]:
        for comp in d.components:
            if not any(w[(comp.label, x)] for x in range(size)):
                continue
            ok, missed = satisfies_max_violation(comp.behavior)
            if not ok:
                names = ", ".join(f"<{format_bits(x, n)}>" for x in missed)
                report.failures.append(f"component {comp.label!r} is not maximally violating: {names}")
    return report


def decomposition_to_json(d: Decomposition) -> dict:
    """``{"n", "components": [{"label", "weights": {bits: "num/den"}, "behavior": {...}}]}``; zero weights omitted."""
    n = d.components[0].behavior.n
    return {
        "n": n,
        "components": [
            {
                "label": str(c.label),
                "weights": {format_bits(x, n): format_fraction(w) for x, w in sorted(c.weights.items()) if w},
                "behavior": behavior_to_json(c.behavior),
            }
            for c in d.components
        ],
    }


def decomposition_from_json(payload: Mapping, base: Path | None = None) -> Decomposition:
    """Inverse of ``decomposition_to_json``; a component may give ``"behavior_file"`` instead of ``"behavior"``."""
    try:
        n = int(payload["n"])
        comps = []
        for item in payload["components"]:
            if "behavior" in item:
                b = behavior_from_json(item["behavior"])
            else:
                path = Path(item["behavior_file"])
                b = load_behavior(path if base is None or path.is_absolute() else base / path)
            if b.n != n:
                raise DimensionMismatch(f"component {item.get('label')!r} has n={b.n}, file says n={n}")
            weights = {}
            for bits, w in item["weights"].items():
                if len(bits) != n:
                    raise DimensionMismatch(f"weight key {bits!r} is not an {n}-bit input")
                weights[parse_bits(bits)] = parse_fraction(w)
            comps.append(Component(str(item["label"]), weights, b))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed decomposition: {exc!r}") from exc
    return Decomposition(tuple(comps))


def load_decomposition(path: str | Path) -> Decomposition:
    path = Path(path)
    return decomposition_from_json(json.loads(path.read_text(encoding="utf-8")), path.parent)


# ---------------------------------------------------------------- sampling and random behaviors


def sample_row(row: Sequence[Fraction], shots: int, seed: int) -> np.ndarray:
    """``shots`` i.i.d. outcome masks from one conditional distribution; identical for identical ``seed``."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.array([float(p) for p in row])
    rng = np.random.default_rng(seed)
    return rng.choice(len(probs), size=shots, p=probs / probs.sum())


def sample_outcomes(b: Behavior, x: int, shots: int, seed: int) -> np.ndarray:
    """``shots`` i.i.d. outcome masks from ``P(.|x)``; identical for identical ``seed``."""
    return sample_row(b.table[x], shots, seed)


def f_counts(outcomes: np.ndarray, n: int) -> np.ndarray:
    """+1/-1 value of ``f`` for each sampled outcome mask."""
    weights = np.array([popcount(a) for a in range(1 << n)])
    return np.where(weights[np.asarray(outcomes)] % 4 == 2, 1, -1)


def random_max_violating_behavior(
    n: int,
    rng: np.random.Generator,
    *,
    denominator: int = 6,
    method: str = "ray",
    max_tries: int = 100_000,
) -> Behavior:
    """Random maximal violator with exact rational entries.

    ``"ray"``: draw a folded correlator direction ``d`` (free class values
    uniform on ``j / denominator``), find the largest ``t`` keeping
    ``ghz + t d`` nonnegative, and return the point at ``u t`` with ``u``
    uniform on ``(0, 1]`` in steps of ``1 / denominator``.  GHZ lies in the
    relative interior of the maximal-violation face, so every point of the
    face is reachable.

    ``"reject"``: use the drawn vector itself and redraw until the table is
    nonnegative.  Acceptance is rare even at ``n = 3``.
    """
    from .behavior import ghz_behavior, table_from_correlators
    from .mermin import folded_free_keys, mermin_folded, random_mermin_correlators

    if method == "reject":
        for _ in range(max_tries):
            c = random_mermin_correlators(n, rng, denominator)
            try:
                return from_correlators(c)
            except NegativeProbability:
                continue
        raise RuntimeError(f"no nonnegative draw in {max_tries} tries at n={n}")
    if method != "ray":
        raise ValueError(f"method must be 'ray' or 'reject', got {method!r}")

    base = ghz_behavior(n).table
    keys = folded_free_keys(n)
    for _ in range(max_tries):
        nums = rng.integers(-denominator, denominator + 1, size=len(keys))
        if not nums.any():
            continue
        moved = table_from_correlators(n, mermin_folded(n, {k: Fraction(int(v), denominator) for k, v in zip(keys, nums)}).values)
        ratios = [
            p / (p - q)
            for row_p, row_q in zip(base, moved)
            for p, q in zip(row_p, row_q)
            if q < p
        ]
        if not ratios:
            continue
        t = min(ratios) * Fraction(int(rng.integers(1, denominator + 1)), denominator)
        rows = [[p + t * (q - p) for p, q in zip(row_p, row_q)] for row_p, row_q in zip(base, moved)]
        return Behavior.from_rows(n, rows)
    raise RuntimeError(f"no usable direction in {max_tries} draws at n={n}")
