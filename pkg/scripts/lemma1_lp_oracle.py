"""Independent float oracle for the minimum of P(f = h_n | x) over maximal Mermin violators.

Formulation differs from the package on purpose: no-signalling enters as
one equality per (party subset T, input pair differing outside T, outcome
on T) comparing the two marginals, the Mermin rows are written out from the
raw sign formula, and HiGHS solves the dense table program directly.
Values are snapped to fractions with denominator <= 64 and frozen.

    python scripts/lemma1_lp_oracle.py --n 3 5 [--out tests/data/lemma1_oracle.json]
"""

from __future__ import annotations

import argparse
import itertools
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import lil_matrix


def ones(v: int) -> int:
    return bin(v).count("1")


def h(n: int) -> int:
    # sqrt(2) cos(pi (n + 4) / 4), rounded; exact for odd n
    return int(round(np.sqrt(2) * np.cos(np.pi * (n + 4) / 4)))


def f(a: int) -> int:
    return 1 if ones(a) % 4 == 2 else -1


def program(n: int, mermin: bool):
    size = 2**n
    var = lambda x, a: x * size + a
    rows, rhs = [], []

    def add(coeffs: dict[int, float], b: float) -> None:
        rows.append(coeffs)
        rhs.append(b)

    for x in range(size):
        add({var(x, a): 1.0 for a in range(size)}, 1.0)
    full = size - 1
    for t in range(1, full):  # proper nonempty subsets kept
        for x, y in itertools.combinations(range(size), 2):
            if (x ^ y) & t or x & t != y & t:
                continue
            for at in range(size):
                if at & ~t & full:
                    continue
                c: dict[int, float] = {}
                for a in range(size):
                    if a & t == at:
                        c[var(x, a)] = c.get(var(x, a), 0) + 1
                        c[var(y, a)] = c.get(var(y, a), 0) - 1
                add(c, 0.0)
    if mermin:
        for x in range(size):
            k = ones(x)
            if k % 2:
                add({var(x, a): (-1.0) ** ones(a) for a in range(size)}, (-1.0) ** ((k - 1) // 2))
    a_eq = lil_matrix((len(rows), size * size))
    for i, c in enumerate(rows):
        for j, v in c.items():
            a_eq[i, j] = v
    return a_eq.tocsr(), np.array(rhs)


def solve(n: int, x: int, mermin: bool, sense: int = 1) -> float:
    size = 2**n
    a_eq, b_eq = program(n, mermin)
    cost = np.zeros(size * size)
    for a in range(size):
        if f(a) == h(n):
            cost[x * size + a] = sense
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return sense * res.fun


def snap(v: float) -> str:
    q = Fraction(v).limit_denominator(64)
    assert abs(float(q) - v) < 1e-7, v
    return f"{q.numerator}/{q.denominator}"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="+", default=[3, 5])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/data/lemma1_oracle.json")
    args = parser.parse_args()

    out: dict = {"formulation": "all-subset marginal equalities, HiGHS, snapped to denominator <= 64"}
    for n in args.n:
        t0 = time.perf_counter()
        size = 2**n
        bits = lambda m: "".join(str((m >> i) & 1) for i in range(n))
        block: dict = {"h_n": h(n), "min": {}, "min_without_mermin": {}, "max": {}}
        for x in range(size):
            if ones(x) % 2 == 0:
                continue
            block["min"][bits(x)] = snap(solve(n, x, True))
            if n == 3:
                block["min_without_mermin"][bits(x)] = snap(solve(n, x, False))
                block["max"][bits(x)] = snap(solve(n, x, True, sense=-1))
        out[str(n)] = block
        print(f"n={n}: {block['min']} ({time.perf_counter() - t0:.1f}s)")
    args.out.write_text(json.dumps(out, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
