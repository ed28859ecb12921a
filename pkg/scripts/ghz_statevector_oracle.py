"""Dense state-vector oracle for the three-party GHZ table.

State (|000> + i|111>)/sqrt(2); input 0 measures sigma_x, input 1 sigma_y.
Outcome +1 is bit 0, party i sits at bit i-1.  Probabilities are computed
in floating point, snapped to the nearest fraction with denominator <= 64,
and frozen as "num/den" strings.  Uses only numpy, not the package.

    python scripts/ghz_statevector_oracle.py [--out tests/data/ghz3_statevector.json]
"""

from __future__ import annotations

import argparse
import json
from fractions import Fraction
from pathlib import Path

import numpy as np

N = 3
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)


def ghz_state(n: int) -> np.ndarray:
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1 / np.sqrt(2)
    psi[-1] = 1j / np.sqrt(2)
    return psi


def projector(obs: np.ndarray, sign: int) -> np.ndarray:
    return (np.eye(2) + sign * obs) / 2


def probability(psi: np.ndarray, x: int, a: int, n: int) -> float:
    # kron order: first factor is the most significant qubit; put party 1 first
    op = np.array([[1.0 + 0j]])
    for i in range(n):
        obs = SY if (x >> i) & 1 else SX
        sign = -1 if (a >> i) & 1 else 1
        op = np.kron(op, projector(obs, sign))
    return float(np.real(np.vdot(psi, op @ psi)))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/data/ghz3_statevector.json")
    args = parser.parse_args()

    psi = ghz_state(N)
    entries = []
    worst = 0.0
    for x in range(2**N):
        for a in range(2**N):
            p = probability(psi, x, a, N)
            q = Fraction(p).limit_denominator(64)
            worst = max(worst, abs(p - float(q)))
            if q:
                bits = lambda m: "".join(str((m >> i) & 1) for i in range(N))
                entries.append({"x": bits(x), "a": bits(a), "p": f"{q.numerator}/{q.denominator}"})
    assert worst < 1e-12, worst
    payload = {"n": N, "state": "(|000> + i|111>)/sqrt(2)", "measurements": {"0": "sigma_x", "1": "sigma_y"},
               "max_snap_error": worst, "entries": entries}
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    print(f"wrote {len(entries)} nonzero entries to {args.out} (max snap error {worst:.1e})")


if __name__ == "__main__":
    main()
