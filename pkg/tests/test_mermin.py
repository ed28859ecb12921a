from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from intrinsic_randomness.behavior import (
    deterministic_behavior,
    from_correlators,
    ghz_behavior,
    mix,
    parse_bits,
    to_correlators,
    uniform_behavior,
)
from intrinsic_randomness.errors import EvenPartyCount, NegativeProbability
from intrinsic_randomness.mermin import (
    algebraic_max,
    expand_mermin,
    folded_free_keys,
    folding_relations,
    full_correlator,
    max_violation_constraints,
    mermin_folded,
    mermin_inputs,
    mermin_sign,
    mermin_value,
    random_mermin_correlators,
    recursion_expansion,
    satisfies_folding,
    satisfies_max_violation,
)


def expected_coefficient(x: int) -> int:
    k = bin(x).count("1")
    return 0 if k % 2 == 0 else (-1) ** ((k - 1) // 2)


def deterministic_points(n: int):
    for strat in itertools.product([[1, 1], [1, -1], [-1, 1], [-1, -1]], repeat=n):
        yield deterministic_behavior(n, list(strat))


# ---------------------------------------------------------------- expansion


def test_chsh_base_case():
    assert expand_mermin(2).coeffs == {0b00: 1, 0b01: 1, 0b10: 1, 0b11: -1}


def test_n3_regression():
    e = expand_mermin(3)
    assert {k: int(v) for k, v in e.coeffs.items()} == {
        parse_bits("001"): 1, parse_bits("010"): 1, parse_bits("100"): 1, parse_bits("111"): -1,
    }
    assert e.coefficient(parse_bits("011")) == 0
    # the recursion itself already yields M_3 at n = 3
    assert recursion_expansion(3).coeffs == e.coeffs


def test_n5_examples():
    e = expand_mermin(5)
    assert e.coefficient(parse_bits("00001")) == 1
    assert e.coefficient(parse_bits("00111")) == -1
    assert e.coefficient(parse_bits("11111")) == 1


@pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
def test_recursion_parity_agreement(n):
    e = expand_mermin(n)
    assert all(e.coefficient(x) == expected_coefficient(x) for x in range(1 << n))


@pytest.mark.parametrize("n", [3, 5, 7, 9, 11])
def test_literal_recursion_is_a_relabelled_rescaling(n):
    # For n = 1 mod 4 the raw recursion sits on even-parity inputs; complementing
    # every input and rescaling recovers the Mermin coefficients.
    raw = recursion_expansion(n)
    full = (1 << n) - 1
    flip = full if n % 4 == 1 else 0
    scale = Fraction(1, 2 ** ((n - 3) // 2))
    sign = 1 if n % 8 in (1, 3) else -1
    assert all(raw.coefficient(x) == sign * scale * expected_coefficient(x ^ flip) for x in range(1 << n))


@pytest.mark.parametrize("n,value", [(3, 4), (5, 16), (7, 64), (9, 256)])
def test_algebraic_max(n, value):
    assert algebraic_max(n) == value == expand_mermin(n).l1_norm()


def test_algebraic_max_rejects_even():
    with pytest.raises(EvenPartyCount):
        algebraic_max(4)


# ---------------------------------------------------------------- values


def test_ghz_and_uniform_values():
    assert mermin_value(ghz_behavior(3)) == 4
    assert mermin_value(uniform_behavior(3)) == 0


def test_local_bound_by_enumeration():
    values = [mermin_value(b) for b in deterministic_points(3)]
    assert len(values) == 64
    assert max(values) == 2 and min(values) == -2


@given(st.fractions(0, 1), st.integers(0, 63), st.integers(0, 63))
def test_affinity(w, i, j):
    points = list(deterministic_points(3))
    b1, b2 = points[i], mix([(Fraction(1, 2), points[j]), (Fraction(1, 2), ghz_behavior(3))])
    m = mix([(w, b1), (1 - w, b2)])
    assert mermin_value(m) == w * mermin_value(b1) + (1 - w) * mermin_value(b2)


# ---------------------------------------------------------------- constraints


def test_constraints_n3():
    cons = max_violation_constraints(3)
    assert cons.required == {parse_bits("001"): 1, parse_bits("010"): 1, parse_bits("100"): 1, parse_bits("111"): -1}
    assert parse_bits("011") not in cons.required


@pytest.mark.parametrize("n", [3, 5, 7, 9])
def test_constraints_match_expansion(n):
    cons = max_violation_constraints(n)
    e = expand_mermin(n)
    assert set(cons.required) == set(e.support())
    assert all(cons.required[x] == e.coefficient(x) for x in cons.required)
    assert cons.required[1 << (n - 1)] == 1


@pytest.mark.parametrize("n", [3, 5, 7])
def test_ghz_satisfies_conditions(n):
    assert satisfies_max_violation(ghz_behavior(n)) == (True, [])


def test_uniform_and_mixture_fail_conditions():
    ok, missed = satisfies_max_violation(uniform_behavior(3))
    assert not ok and missed == mermin_inputs(3)
    half = mix([(Fraction(1, 2), ghz_behavior(3)), (Fraction(1, 2), uniform_behavior(3))])
    assert not satisfies_max_violation(half)[0]


@given(st.fractions(0, 1), st.integers(0, 63))
def test_conditions_iff_maximal_value(w, j):
    b = mix([(w, ghz_behavior(3)), (1 - w, list(deterministic_points(3))[j])])
    assert satisfies_max_violation(b)[0] == (mermin_value(b) == algebraic_max(3))


def test_mermin_sign_rejects_even():
    with pytest.raises(ValueError):
        mermin_sign(0b11)


# ---------------------------------------------------------------- folding


@pytest.mark.parametrize("n,count", [(3, 10), (5, 46), (7, 190)])
def test_folded_free_class_counts(n, count):
    assert len(folded_free_keys(n)) == count


@pytest.mark.parametrize("n", [3, 5])
def test_ghz_obeys_folding(n):
    assert satisfies_folding(to_correlators(ghz_behavior(n)))[0]


@pytest.mark.parametrize("n", [3, 5, 7])
def test_random_folded_vectors_obey_folding(n):
    rng = np.random.default_rng(n)
    for _ in range(5):
        c = random_mermin_correlators(n, rng)
        assert satisfies_folding(c)[0]
        full = (1 << n) - 1
        assert all(c.values[(full, x)] == s for x, s in max_violation_constraints(n).required.items())


def test_folding_relation_count():
    # every odd-parity input pairs each subset with its complement once
    assert len(folding_relations(3)) == 4 * 4


def test_folding_holds_on_every_maximal_violator():
    rng = np.random.default_rng(3)
    from intrinsic_randomness.randomness import random_max_violating_behavior

    for _ in range(20):
        b = random_max_violating_behavior(3, rng)
        assert satisfies_folding(to_correlators(b))[0]


def test_mermin_folded_accepts_any_class_member():
    c = mermin_folded(3, {(0b001, 0): Fraction(1, 3), (0b100, 0b100): Fraction(1, 3)})
    assert c.values[(0b001, 0)] == Fraction(1, 3)
    assert c.values[(0b100, 0b100)] == Fraction(1, 3)


def test_full_correlator_of_ghz_row():
    b = ghz_behavior(5)
    assert full_correlator(b, parse_bits("00111")) == -1


def test_unfolded_positive_point_is_rare():
    # the folding relations are what positivity adds; with them dropped the draws leave the polytope
    rng = np.random.default_rng(11)
    from intrinsic_randomness.mermin import mermin_conditioned, free_correlator_keys

    keys = free_correlator_keys(3)
    failures = 0
    for _ in range(20):
        vals = {k: Fraction(int(v), 4) for k, v in zip(keys, rng.integers(-4, 5, size=len(keys)))}
        try:
            from_correlators(mermin_conditioned(3, vals))
        except NegativeProbability:
            failures += 1
    assert failures == 20
