"""Acceptance criteria 1-9, each at its stated tolerance and runtime.

Every test records one PASS/FAIL line (shown in the pytest terminal
summary, or printed when this file is run as a script) and then asserts.
Criteria 2, 3 and 7 are checked over every Mermin input as stated; the
inputs whose full correlator is -1 do not meet the bound (see the
decisions ledger), so those criteria fail by design of the check, not of
the solver.
"""

from __future__ import annotations

import contextlib
import io
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE, load_json
from intrinsic_randomness.behavior import behavior_from_json, ghz_behavior
from intrinsic_randomness.certify import certify_lemma1
from intrinsic_randomness.cli import main
from intrinsic_randomness.coefficients import (
    alpha_primed_closed,
    alpha_raw,
    beta,
    compact_identity_check,
    roots_filter,
    swapped_positivity_identity_check,
)
from intrinsic_randomness.mermin import mermin_inputs, mermin_value, random_mermin_correlators
from intrinsic_randomness.randomness import (
    f_counts,
    f_value,
    ghz_guessing_formula,
    h_n,
    intrinsic_guessing_max_violation,
    observed_guessing,
    prob_f,
    random_max_violating_behavior,
    sample_outcomes,
)

HALF = Fraction(1, 2)


def record(key: str, ok: bool, detail: str) -> None:
    ACCEPTANCE[key] = (ok, detail)
    print(f"{key} {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def _report_g(n: int) -> Fraction:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        rc = main(["report", "--n", str(n)])
    assert rc == 0
    line = next(l for l in buf.getvalue().splitlines() if l.startswith("G = "))
    return Fraction(line.rsplit("=", 1)[1].strip())


def test_c1_closed_form_report():
    expected = {3: Fraction(3, 4), 5: Fraction(5, 8), 7: Fraction(9, 16), 9: Fraction(17, 32)}
    parts, ok = [], True
    for n, want in expected.items():
        t0 = time.perf_counter()
        got = _report_g(n)
        dt = time.perf_counter() - t0
        formula = HALF + Fraction(1, 2 ** ((n + 1) // 2))
        good = got == want == formula == ghz_guessing_formula(n) and dt < 1.0
        ok &= good
        parts.append(f"N={n}: {got} ({dt:.2f}s)")
    record("C1", ok, "; ".join(parts))


def _lemma1_line(report, bound, tolerance=0.0) -> tuple[bool, str]:
    values = {x: c.optimal_value for x, c in report.certificates.items()}
    low = [x for x, v in values.items() if not v >= bound - tolerance]
    n = report.n
    bits = lambda x: format(x, f"0{n}b")[::-1]
    by = {}
    for x, v in values.items():
        by.setdefault(str(Fraction(v).limit_denominator(1 << 20) if report.mode == "float" else v), []).append(bits(x))
    summary = ", ".join(f"{v} on {len(xs)}" for v, xs in sorted(by.items()))
    return not low, f"{len(values)} inputs, min values: {summary}" + (f"; below bound: {[bits(x) for x in low]}" if low else "")


def test_c2_lemma1_exact_n3(lemma1_oracle):
    t0 = time.perf_counter()
    report = certify_lemma1(3, mode="exact")
    dt = time.perf_counter() - t0
    ok, detail = _lemma1_line(report, HALF)
    # dual route: the independent HiGHS formulation gives the same optimum per input
    oracle = {x: Fraction(v) for x, v in lemma1_oracle["3"]["min"].items()}
    agree = all(oracle[format(x, "03b")[::-1]] == c.optimal_value for x, c in report.certificates.items())
    record("C2", ok and agree and dt < 10 and len(report.certificates) == 4,
           f"N=3 exact: {detail}; oracle agrees: {agree}; {dt:.1f}s")


@pytest.mark.slow
def test_c3_lemma1_exact_n5_float_n7(lemma1_oracle):
    t0 = time.perf_counter()
    r5 = certify_lemma1(5, mode="exact")
    dt5 = time.perf_counter() - t0
    ok5, d5 = _lemma1_line(r5, HALF)
    oracle = {x: Fraction(v) for x, v in lemma1_oracle["5"]["min"].items()}
    agree = all(oracle[format(x, "05b")[::-1]] == c.optimal_value for x, c in r5.certificates.items())
    ok5 = ok5 and dt5 < 600 and len(r5.certificates) == 16

    t0 = time.perf_counter()
    r7 = certify_lemma1(7, mode="float", tolerance=1e-9)
    dt7 = time.perf_counter() - t0
    ok7, d7 = _lemma1_line(r7, HALF, 1e-9)
    ok7 = ok7 and dt7 < 1800 and len(r7.certificates) == 64
    record("C3", ok5 and agree and ok7,
           f"N=5 exact [{'ok' if ok5 else 'FAIL'}]: {d5}; oracle agrees: {agree}; {dt5:.0f}s | "
           f"N=7 float [{'ok' if ok7 else 'FAIL'}]: {d7}; {dt7:.0f}s")


def test_c4_negative_control():
    report = certify_lemma1(3, mode="exact", mermin=False)
    low = report.minimum()
    record("C4", low < HALF, f"N=3 without Mermin rows: minimum {low} over {len(report.certificates)} inputs")


def _direct_filter(n: int, r: int, a: int) -> int:
    return sum(math.comb(n, k) for k in range(a, n + 1, r))


def test_c5_appendix_coefficients():
    t0 = time.perf_counter()
    bad = []
    for n in range(3, 16, 2):
        for i in range((n + 1) // 2):
            shift = 2 ** (n - 2) if i == 0 else 0
            if h_n(n) * (alpha_raw(n, i) - shift) != alpha_primed_closed(n, i):
                bad.append(("alpha", n, i))
            if alpha_primed_closed(n, i) != 2 ** ((n - 3) // 2) * beta(n, i):
                bad.append(("beta", n, i))
    filters = 0
    for n in range(0, 65):
        for a in range(4):
            filters += 1
            if roots_filter(n, 4, a) != _direct_filter(n, 4, a):
                bad.append(("filter", n, a))
    dt = time.perf_counter() - t0
    record("C5", not bad and dt < 5, f"odd n<=15 coefficient identities, {filters} filter values n<=64; mismatches {bad[:3]}; {dt:.2f}s")


def test_c6_identity_suites():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20260101)
    counts, bad = {}, []
    for n in (3, 5, 7):
        x_m = 1 << (n - 1)
        for _ in range(100):
            c = random_mermin_correlators(n, rng)
            r1 = compact_identity_check(c, x_m)
            r2 = swapped_positivity_identity_check(c, x_m)
            if r1 != 0 or r2 != 0:
                bad.append((n, r1, r2))
        counts[n] = 100
    dt = time.perf_counter() - t0
    record("C6", not bad and dt < 30, f"100 vectors each at n=3,5,7, both checks; nonzero residuals {len(bad)}; {dt:.1f}s")


def test_c7_theorem1_equality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    h3 = h_n(3)
    unequal, wrong_argmax, below = set(), set(), set()
    for _ in range(200):
        b = random_max_violating_behavior(3, rng)
        for x in mermin_inputs(3):
            obs = observed_guessing(f_value, x, b)
            intr = intrinsic_guessing_max_violation(x, b)
            bits = format(x, "03b")[::-1]
            if obs.value != intr.value:
                unequal.add(bits)
            if obs.argmax_outcome != h3:
                wrong_argmax.add(bits)
            if prob_f(b, x, h3) < HALF:
                below.add(bits)
    dt = time.perf_counter() - t0
    ok = not unequal and not wrong_argmax and not below and dt < 30
    record("C7", ok, f"200 samples x 4 Mermin inputs: intrinsic != observed on {sorted(unequal)}; "
           f"argmax != h_3 on {sorted(wrong_argmax)}; P(f=h_3|x) < 1/2 on {sorted(below)}; {dt:.1f}s")


def test_c8_ghz_validity():
    parts, ok = [], True
    for n in (3, 5, 7, 9):
        b = ghz_behavior(n)
        valid = b.is_nonnegative() and b.is_normalized() and b.is_no_signalling()
        value = mermin_value(b)
        good = valid and value == 2 ** (n - 1)
        ok &= good
        parts.append(f"N={n}: valid={valid}, M={value}")
    oracle = behavior_from_json(load_json("ghz3_statevector.json"))
    same = oracle.table == ghz_behavior(3).table
    record("C8", ok and same, "; ".join(parts) + f"; N=3 equals state-vector oracle: {same}")


def test_c9_finite_sample():
    b = ghz_behavior(3)
    x_m = 0b100
    shots, seed = 10**6, 12345
    first = sample_outcomes(b, x_m, shots, seed)
    second = sample_outcomes(b, x_m, shots, seed)
    p_hat = float(np.mean(f_counts(first, 3) == 1))
    se = math.sqrt(0.75 * 0.25 / shots)
    same = np.array_equal(first, second)
    ok = abs(p_hat - 0.75) <= 3 * se and same
    record("C9", ok, f"10^6 shots seed {seed}: P(f=+1) = {p_hat:.6f}, |dev| = {abs(p_hat - 0.75):.6f} "
           f"(3 SE = {3 * se:.6f}); repeat identical: {same}")


if __name__ == "__main__":
    from conftest import load_json as _load

    tests = [
        test_c1_closed_form_report,
        lambda: test_c2_lemma1_exact_n3(_load("lemma1_oracle.json")),
        lambda: test_c3_lemma1_exact_n5_float_n7(_load("lemma1_oracle.json")),
        test_c4_negative_control,
        test_c5_appendix_coefficients,
        test_c6_identity_suites,
        test_c7_theorem1_equality,
        test_c8_ghz_validity,
        test_c9_finite_sample,
    ]
    for t in tests:
        with contextlib.suppress(AssertionError):
            t()
