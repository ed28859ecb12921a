from __future__ import annotations

import json
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from intrinsic_randomness.behavior import format_bits, ghz_behavior, load_behavior, parse_bits
from intrinsic_randomness.certify import (
    EQ,
    GE,
    Constraint,
    LinearProgram,
    build_lemma1_lp,
    certify_lemma1,
    check_invariance,
    reduce_by_stabilizer,
    solve_exact,
    solve_float,
    stabilizer_generators,
    verify_chart,
    write_certificates,
)
from intrinsic_randomness.errors import EvenPartyCount, InfeasibleProgram, NonMerminInput
from intrinsic_randomness.mermin import mermin_inputs
from intrinsic_randomness.randomness import f_value, ghz_guessing_formula, h_n
from intrinsic_randomness.simplex import solve_standard_form

HALF = Fraction(1, 2)


def table_values(b):
    return {(x, a): p for x, row in enumerate(b.table) for a, p in enumerate(row)}


# ---------------------------------------------------------------- simplex


def test_one_dimensional_sanity():
    lp = LinearProgram(
        ("x",),
        {"x": Fraction(1)},
        (Constraint({"x": Fraction(1)}, GE, Fraction(1, 3)), Constraint({"x": Fraction(-1)}, GE, Fraction(-1))),
    )
    cert = solve_exact(lp)
    assert cert.optimal_value == Fraction(1, 3)


def test_infeasible_is_reported():
    lp = LinearProgram(
        ("x",),
        {"x": Fraction(1)},
        (Constraint({"x": Fraction(1)}, GE, Fraction(2)), Constraint({"x": Fraction(1)}, EQ, Fraction(1))),
    )
    with pytest.raises(InfeasibleProgram):
        solve_exact(lp)


def test_constraint_rejects_unknown_relation():
    with pytest.raises(ValueError):
        Constraint({"x": Fraction(1)}, "<=", Fraction(0))


@st.composite
def small_programs(draw):
    m = draw(st.integers(1, 4))
    n = draw(st.integers(2, 6))
    ints = st.integers(-3, 3)
    a = [[draw(ints) for _ in range(n)] for _ in range(m)]
    x0 = [draw(st.integers(0, 3)) for _ in range(n)]
    b = [sum(ai * xi for ai, xi in zip(row, x0)) for row in a]
    c = [draw(st.integers(0, 5)) for _ in range(n)]  # c >= 0 keeps the program bounded
    return a, b, c


@given(small_programs())
def test_simplex_matches_highs(prog):
    a, b, c = prog
    rows = [{j: Fraction(v) for j, v in enumerate(row) if v} for row in a]
    res = solve_standard_form(rows, [Fraction(v) for v in b], [Fraction(v) for v in c])
    ref = linprog(c, A_eq=np.array(a, dtype=float), b_eq=b, bounds=(0, None), method="highs")
    assert res.status == "optimal" and ref.status == 0
    assert abs(float(res.value) - ref.fun) < 1e-7
    # exact primal feasibility and dual feasibility with complementary slackness
    for row, rhs in zip(rows, b):
        assert sum(v * res.x[j] for j, v in row.items()) == rhs
    reduced = [Fraction(c[j]) - sum(res.duals[i] * Fraction(a[i][j]) for i in range(len(a))) for j in range(len(c))]
    assert all(r >= 0 for r in reduced)
    assert all(r == 0 for r, xj in zip(reduced, res.x) if xj)


def test_simplex_degenerate_program_terminates():
    # many redundant copies of the same rows; anti-cycling must still terminate
    rows = [{0: Fraction(1), 1: Fraction(1)}] * 5 + [{1: Fraction(1), 2: Fraction(1)}] * 5
    res = solve_standard_form(rows, [Fraction(1)] * 10, [Fraction(1), Fraction(0), Fraction(1)])
    assert res.status == "optimal" and res.value == 0


# ---------------------------------------------------------------- program construction


def test_lp_shape_n3():
    lp = build_lemma1_lp(3, "001")
    assert len(lp.variables) == 64
    assert lp.count("norm") == 8
    assert lp.count("mermin") == 4
    assert lp.count("ns") == 3 * 4 * 4
    support = sorted(format_bits(a, 3) for (x, a), c in lp.objective.items() if c)
    assert support == ["011", "101", "110"]
    assert all(f_value(parse_bits(s)) == h_n(3) for s in support)


def test_lp_size_n5():
    assert len(build_lemma1_lp(5, "00001").variables) == 1024


def test_lp_rejects_bad_arguments():
    with pytest.raises(EvenPartyCount):
        build_lemma1_lp(4, 1)
    with pytest.raises(NonMerminInput):
        build_lemma1_lp(3, "011")


@pytest.mark.parametrize("n", [3, 5])
def test_ghz_is_feasible_and_objective_matches(n):
    g = table_values(ghz_behavior(n))
    for x in mermin_inputs(n):
        lp = build_lemma1_lp(n, x)
        assert lp.violations(g) == []
    x_m = 1 << (n - 1)
    assert build_lemma1_lp(n, x_m).objective_value(g) == ghz_guessing_formula(n)


def test_chart_spans_the_equality_set():
    info = verify_chart(build_lemma1_lp(3, "001"))
    assert info["rank_equalities"] + info["chart_dim"] == 64


# ---------------------------------------------------------------- exact and float solves


def test_exact_n3_values_match_oracle(lemma1_oracle):
    for bits, want in lemma1_oracle["3"]["min"].items():
        cert = solve_exact(build_lemma1_lp(3, bits))
        assert cert.optimal_value == Fraction(want)
        assert build_lemma1_lp(3, bits).violations(cert.values) == []
        assert cert.witness.is_no_signalling()


def test_exact_x_m_is_one_half():
    assert solve_exact(build_lemma1_lp(3, "001")).optimal_value == HALF


@pytest.mark.parametrize("route", [dict(use_chart=False), dict(hint="none"), dict(hint="highs"), dict(reduce=True)])
def test_exact_routes_agree(route):
    values = {bits: solve_exact(build_lemma1_lp(3, bits), **route).optimal_value for bits in ("001", "111")}
    assert values == {"001": HALF, "111": 0}


def test_maximize_is_at_most_one(lemma1_oracle):
    for bits, want in lemma1_oracle["3"]["max"].items():
        lp = build_lemma1_lp(3, bits)
        neg = lp.with_objective({v: -c for v, c in lp.objective.items()})
        top = -solve_exact(neg).optimal_value
        assert top <= 1 and top == Fraction(want)


def test_float_matches_exact_n3():
    tol = 1e-9
    for x in mermin_inputs(3):
        lp = build_lemma1_lp(3, x)
        exact = solve_exact(lp).optimal_value
        approx = solve_float(lp, tol)
        assert abs(approx.optimal_value - float(exact)) <= 10 * tol
        assert approx.max_residual <= tol


def test_float_n5_matches_oracle(lemma1_oracle):
    for bits, want in lemma1_oracle["5"]["min"].items():
        cert = solve_float(build_lemma1_lp(5, bits), 1e-9)
        assert abs(cert.optimal_value - float(Fraction(want))) <= 1e-8


@pytest.mark.parametrize("bits", ["00001", "00111"])
def test_exact_n5_single_inputs(bits, lemma1_oracle):
    cert = solve_exact(build_lemma1_lp(5, bits), reduce=True)
    assert cert.optimal_value == Fraction(lemma1_oracle["5"]["min"][bits])
    assert build_lemma1_lp(5, bits).violations(cert.values) == []


def test_duplicated_normalization_row_same_optimum():
    lp = build_lemma1_lp(3, "001")
    dup = replace(lp, constraints=lp.constraints + (lp.constraints[0],), chart_builder=None)
    assert solve_exact(dup).optimal_value == solve_exact(lp).optimal_value == HALF
    assert abs(solve_float(dup, 1e-9).optimal_value - 0.5) <= 1e-8


def test_float_rejects_nonpositive_tolerance():
    with pytest.raises(ValueError):
        solve_float(build_lemma1_lp(3, "001"), 0.0)


# ---------------------------------------------------------------- stabilizer reduction


@pytest.mark.parametrize("bits", ["001", "111", "00001", "00111"])
def test_program_invariant_under_stabilizer(bits):
    n, x = len(bits), parse_bits(bits)
    check_invariance(build_lemma1_lp(n, x), stabilizer_generators(n, x))


def test_invariance_check_catches_a_wrong_map():
    # swapping parties 1 and 3 moves the target input 001
    with pytest.raises(ValueError):
        check_invariance(build_lemma1_lp(3, "001"), [(2, 1, 0)])


def test_reduction_preserves_optimum_n3():
    for x in mermin_inputs(3):
        lp = build_lemma1_lp(3, x)
        red = reduce_by_stabilizer(lp)
        assert len(red.program.variables) < len(lp.variables)
        assert solve_exact(lp, reduce=True).optimal_value == solve_exact(lp).optimal_value


# ---------------------------------------------------------------- sweeps and export


def test_certify_n3_report():
    report = certify_lemma1(3)
    assert len(report.certificates) == 4
    assert report.failures() == [parse_bits("111")]
    assert report.minimum() == 0


def test_symmetry_reduction_matches_direct():
    direct = certify_lemma1(3)
    sym = certify_lemma1(3, symmetry=True)
    assert {x: c.optimal_value for x, c in sym.certificates.items()} == {x: c.optimal_value for x, c in direct.certificates.items()}
    assert sym.reduction and all("party map" in v for v in sym.reduction.values())
    for x, cert in sym.certificates.items():
        assert build_lemma1_lp(3, x).violations(cert.values) == []


def test_negative_control():
    report = certify_lemma1(3, mermin=False)
    assert report.minimum() < HALF


def test_exact_cap():
    with pytest.raises(ValueError):
        certify_lemma1(7, mode="exact")


def test_certificates_written_and_deterministic(tmp_path):
    report = certify_lemma1(3, inputs=[parse_bits("001")])
    first = write_certificates(report, tmp_path / "a")
    second = write_certificates(certify_lemma1(3, inputs=[parse_bits("001")]), tmp_path / "b")
    assert [p.read_bytes() for p in first] == [p.read_bytes() for p in second]
    cert = json.loads((tmp_path / "a" / "lemma1_n3_x001.json").read_text())
    assert cert["value"] == "1/2" and cert["status"] == "Optimal" and cert["mode"] == "Exact"
    witness = load_behavior(tmp_path / "a" / cert["witness_file"])
    assert witness.is_no_signalling() and witness.is_nonnegative()
