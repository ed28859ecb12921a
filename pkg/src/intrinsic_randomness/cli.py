"""Command-line front end.

Exit codes: 0 success, 2 usage or parse error, 3 solver failure,
4 a checked claim failed (a Lemma-1 bound or an identity), 5 audit failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from decimal import Context, Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .behavior import (
    char_sign,
    check_party_count,
    exact_sum,
    format_bits,
    format_fraction,
    ghz_row,
    load_behavior,
    parse_bits,
    parse_fraction,
)
from .certify import certify_lemma1, write_certificates
from .coefficients import compact_identity_check, swapped_positivity_identity_check, write_coefficients_csv
from .config import limits
from .errors import InfeasibleProgram, NumericallyUnstable, RandomnessError, UnboundedProgram
from .mermin import algebraic_max, expand_mermin, mermin_inputs, mermin_sign, random_mermin_correlators
from .randomness import (
    audit_decomposition,
    f_counts,
    f_value,
    ghz_guessing_formula,
    guess_from_row,
    h_n,
    intrinsic_from_row,
    load_decomposition,
    sample_row,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_BOUND, EXIT_AUDIT = 0, 2, 3, 4, 5
SCAN_HEADER = ("n", "G_formula", "G_ghz", "h_n", "lemma1_min")
log = logging.getLogger("intrinsic_randomness")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: int | None = None
    mode: str = "exact"
    tolerance: float | None = None
    shots: int = 0
    seed: int | None = None
    output: Path | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.tolerance is not None and self.tolerance <= 0:
            raise UsageError("--tol must be positive")
        if self.shots > 0 and self.seed is None:
            raise UsageError("--seed is required when sampling")


def decimal12(v: Fraction) -> str:
    """Decimal rendering with 12 significant digits, rounded from the exact value."""
    ctx = Context(prec=12)
    d = ctx.divide(Decimal(v.numerator), Decimal(v.denominator))
    return format(d.normalize(ctx), "f") if d else "0"


def _odd_n(n: int) -> int:
    try:
        check_party_count(n, odd=True)
    except RandomnessError as exc:
        raise UsageError(str(exc)) from exc
    return n


def _x_m(n: int) -> int:
    return 1 << (n - 1)


def _emit(text: str, output: Path | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")


def _sign(v: int) -> str:
    return f"{v:+d}"


# ---------------------------------------------------------------- commands


def cmd_report(args: argparse.Namespace) -> int:
    n = _odd_n(args.n)
    h = h_n(n)
    g = ghz_guessing_formula(n)
    m_max = algebraic_max(n)
    lines = [
        f"n = {n}",
        f"h_n = {_sign(h)}",
        f"Mermin algebraic maximum = {m_max}",
        f"G = 1/2 + 2^-{(n + 1) // 2} = {g}",
        "",
        f"{'input':<{max(n, 5)}}  {'G_obs':>8}  guess  {'G_int':>8}  equal",
    ]
    ghz_rows = {x: ghz_row(n, x) for x in mermin_inputs(n)}
    full = (1 << n) - 1
    premise = all(
        exact_sum(p if char_sign(a, full) == 1 else -p for a, p in enumerate(row) if p) == mermin_sign(x)
        for x, row in ghz_rows.items()
    )
    rows = []
    all_equal = premise
    for x, row in ghz_rows.items():
        obs = guess_from_row(f_value, row)
        intr = intrinsic_from_row(n, x, row)
        equal = obs.value == intr.value
        all_equal &= equal
        rows.append({"x": format_bits(x, n), "G_obs": format_fraction(obs.value), "argmax": obs.argmax_outcome,
                     "G_int": format_fraction(intr.value), "equal": equal})
        lines.append(
            f"{format_bits(x, n):<{max(n, 5)}}  {str(obs.value):>8}  {_sign(obs.argmax_outcome):>5}  {str(intr.value):>8}  {'yes' if equal else 'NO'}"
        )
    g_xm = guess_from_row(f_value, ghz_row(n, _x_m(n)))
    lines += [
        "",
        f"G_obs at x_m = {format_bits(_x_m(n), n)}: {g_xm.value} (guess {_sign(g_xm.argmax_outcome)})",
        f"matches closed form: {'yes' if g_xm.value == g else 'NO'}",
        f"every Mermin correlator extremal: {'yes' if premise else 'NO'}",
        f"intrinsic = observed on every Mermin input: {'yes' if all_equal else 'NO'}",
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    if args.json:
        payload = {"n": n, "h_n": h, "mermin_max": m_max, "G_formula": format_fraction(g),
                   "G_ghz_x_m": format_fraction(g_xm.value), "inputs": rows}
        _emit(json.dumps(payload, indent=2) + "\n", Path(args.json))
    return EXIT_OK if all_equal and g_xm.value == g else EXIT_BOUND


def cmd_certify(args: argparse.Namespace) -> int:
    n = _odd_n(args.n)
    cfg = RunConfig("certify", n, args.mode, args.tol, output=Path(args.out))
    if cfg.mode == "exact" and n > limits().exact_max_n:
        raise UsageError(f"exact mode is capped at n={limits().exact_max_n}; use --mode float or raise the cap")
    inputs = None
    if args.inputs:
        inputs = [parse_bits(s) for s in args.inputs.split(",")]
        bad = [s for s, x in zip(args.inputs.split(","), inputs) if len(s) != n or bin(x).count("1") % 2 == 0]
        if bad:
            raise UsageError(f"not odd-parity {n}-bit inputs: {bad}")
    try:
        report = certify_lemma1(
            n, mode=cfg.mode, tolerance=cfg.tolerance, inputs=inputs,
            mermin=not args.drop_mermin_constraints, symmetry=args.symmetry,
        )
    except (InfeasibleProgram, UnboundedProgram, NumericallyUnstable, ArithmeticError, RuntimeError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    failures = set(report.failures())
    bound = "1/2" if cfg.mode == "exact" else f"1/2 - {report.tolerance:g}"
    scope = "no-signalling tables, Mermin rows dropped" if args.drop_mermin_constraints else "maximal Mermin violators"
    print(f"min P(f = h_{n} | x) over {scope} ({cfg.mode}, bound {bound})")
    for x, cert in sorted(report.certificates.items()):
        value = cert.optimal_value
        shown = str(value) if isinstance(value, Fraction) else f"{value:.12g}"
        print(f"{format_bits(x, n)}  {shown:>16}  {'ok' if x not in failures else 'BELOW'}")
    written = write_certificates(report, cfg.output)
    print(f"{len(written)} certificates in {cfg.output}")
    if failures:
        print(f"bound fails on {len(failures)} of {len(report.certificates)} inputs", file=sys.stderr)
        return EXIT_BOUND
    return EXIT_OK


def scan_rows(n_max: int, lemma1: str, lemma1_max_n: int, tolerance: float | None) -> list[dict]:
    rows = []
    for n in range(3, n_max + 1, 2):
        g_ghz = guess_from_row(f_value, ghz_row(n, _x_m(n))).value
        lemma = None
        if lemma1 != "none" and n <= lemma1_max_n:
            # only the minimum is reported, so one solve per Hamming weight suffices
            lemma = certify_lemma1(n, mode=lemma1, tolerance=tolerance, symmetry=True).minimum()
        rows.append({"n": n, "G_formula": ghz_guessing_formula(n), "G_ghz": g_ghz, "h_n": h_n(n), "lemma1_min": lemma})
    return rows


def cmd_scan(args: argparse.Namespace) -> int:
    if args.n_max < 3 or args.n_max % 2 == 0:
        raise UsageError("--n-max must be odd and at least 3")
    _odd_n(args.n_max)
    cfg = RunConfig("scan", args.n_max, format=args.format, output=Path(args.out) if args.out else None)
    try:
        rows = scan_rows(args.n_max, args.lemma1, args.lemma1_max_n, args.tol)
    except (InfeasibleProgram, UnboundedProgram, NumericallyUnstable, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SCAN_HEADER)
        for r in rows:
            lemma = r["lemma1_min"]
            lemma_cell = "" if lemma is None else decimal12(Fraction(lemma)) if isinstance(lemma, Fraction) else f"{lemma:.12g}"
            writer.writerow([r["n"], decimal12(r["G_formula"]), decimal12(r["G_ghz"]), r["h_n"], lemma_cell])
        text = buf.getvalue()
    else:
        def exact(v):
            return None if v is None else format_fraction(v) if isinstance(v, Fraction) else v

        text = json.dumps([{k: exact(v) if k != "n" and k != "h_n" else v for k, v in r.items()} for r in rows], indent=2) + "\n"
    _emit(text, cfg.output)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    n = _odd_n(args.n)
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    cfg = RunConfig("simulate", n, shots=args.shots, seed=args.seed)
    x = parse_bits(args.input) if args.input else _x_m(n)
    if args.input and len(args.input) != n:
        raise UsageError(f"--input must have {n} bits")
    outcomes = sample_row(ghz_row(n, x), cfg.shots, cfg.seed)
    h = h_n(n)
    hits = int(np.count_nonzero(f_counts(outcomes, n) == h))
    p_hat = hits / cfg.shots
    exact = sum((p for a, p in enumerate(ghz_row(n, x)) if f_value(a) == h), Fraction(0))
    se = math.sqrt(float(exact) * (1 - float(exact)) / cfg.shots)
    dev = p_hat - float(exact)
    payload = {
        "n": n, "input": format_bits(x, n), "shots": cfg.shots, "seed": cfg.seed, "h_n": h,
        "hits": hits, "estimate": round(p_hat, 12), "exact": format_fraction(exact),
        "G_formula": format_fraction(ghz_guessing_formula(n)),
        "standard_error": round(se, 12), "deviation": round(dev, 12),
        "z": round(dev / se, 6) if se else 0.0,
    }
    if args.json:
        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        sys.stdout.write(
            f"GHZ n={n} input {payload['input']}: {hits}/{cfg.shots} shots with f = {_sign(h)}\n"
            f"estimate {p_hat:.6f}  exact {exact} ({float(exact):.6f})  se {se:.6f}  "
            f"deviation {dev:+.6f} ({payload['z']:+.3f} se)\n"
        )
    return EXIT_OK


def cmd_audit(args: argparse.Namespace) -> int:
    try:
        d = load_decomposition(args.decomposition)
        target = load_behavior(args.target)
        eps = parse_fraction(args.epsilon)
        report = audit_decomposition(d, target, eps)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read inputs: {exc}") from exc
    if report.passed:
        print(f"audit passed: {len(d.components)} components reproduce the target")
        return EXIT_OK
    for reason in report.failures:
        print(f"FAIL {reason}")
    return EXIT_AUDIT


def cmd_mermin(args: argparse.Namespace) -> int:
    n = args.n
    try:
        check_party_count(n)
    except RandomnessError as exc:
        raise UsageError(str(exc)) from exc
    exp = expand_mermin(n)
    payload = {
        "n": n,
        "coefficients": {format_bits(x, n): format_fraction(exp.coefficient(x)) for x in exp.support()},
        "l1_norm": format_fraction(exp.l1_norm()),
    }
    _emit(json.dumps(payload, indent=2) + "\n", Path(args.out) if args.out else None)
    return EXIT_OK


def cmd_coefficients(args: argparse.Namespace) -> int:
    if args.n_max < 3 or args.n_max % 2 == 0:
        raise UsageError("--n-max must be odd and at least 3")
    _odd_n(args.n_max)
    ns = list(range(3, args.n_max + 1, 2))
    if args.out:
        write_coefficients_csv(ns, args.out)
    else:
        from .coefficients import coefficients_csv

        sys.stdout.write(coefficients_csv(ns))
    return EXIT_OK


def cmd_identities(args: argparse.Namespace) -> int:
    n = _odd_n(args.n)
    rng = np.random.default_rng(args.seed)
    x_m = _x_m(n)
    bad = 0
    for _ in range(args.samples):
        c = random_mermin_correlators(n, rng)
        r1 = compact_identity_check(c, x_m)
        r2 = swapped_positivity_identity_check(c, x_m)
        bad += (r1 != 0) + (r2 != 0)
    print(f"n={n}: {args.samples} vectors, {2 * args.samples - bad} of {2 * args.samples} residuals exactly 0")
    return EXIT_OK if bad == 0 else EXIT_BOUND


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="intrinsic-randomness",
        description="Exact checks of the randomness of a parity bit on maximal Mermin violators.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("report", help="closed-form and observed guessing probabilities on GHZ")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    r.set_defaults(func=cmd_report)

    c = sub.add_parser("certify", help="solve the Lemma-1 programs and write certificates")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--mode", choices=("exact", "float"), default="exact")
    c.add_argument("--tol", type=float, default=None, help="float-mode tolerance (default 1e-9)")
    c.add_argument("--out", default="certificates", help="output directory")
    c.add_argument("--inputs", help="comma-separated bitstrings (default: every odd-parity input)")
    c.add_argument("--symmetry", action="store_true", help="solve one input per Hamming weight")
    c.add_argument("--drop-mermin-constraints", action="store_true", help=argparse.SUPPRESS)
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("scan", help="table of G against n")
    s.add_argument("--n-max", type=int, required=True)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--out", help="output file (default stdout)")
    s.add_argument("--lemma1", choices=("none", "exact", "float"), default="none",
                   help="also compute the Lemma-1 minimum over all inputs")
    s.add_argument("--lemma1-max-n", type=int, default=5)
    s.add_argument("--tol", type=float, default=None)
    s.set_defaults(func=cmd_scan)

    m = sub.add_parser("simulate", help="sample GHZ outcomes and estimate P(f = h_n)")
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--shots", type=int, required=True)
    m.add_argument("--seed", type=int, required=True)
    m.add_argument("--input", help="bitstring (default x_m = 0...01)")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_simulate)

    a = sub.add_parser("audit", help="check a decomposition of a behavior")
    a.add_argument("--decomposition", required=True)
    a.add_argument("--target", required=True)
    a.add_argument("--epsilon", default="0", help="floor on p(e|x); 0 means strictly positive")
    a.set_defaults(func=cmd_audit)

    e = sub.add_parser("mermin", help="export the Mermin operator's correlator expansion")
    e.add_argument("--n", type=int, required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_mermin)

    k = sub.add_parser("coefficients", help="export alpha, alpha' and beta as CSV")
    k.add_argument("--n-max", type=int, default=15)
    k.add_argument("--out")
    k.set_defaults(func=cmd_coefficients)

    i = sub.add_parser("identities", help="run both coefficient identities on random folded vectors")
    i.add_argument("--n", type=int, required=True)
    i.add_argument("--samples", type=int, default=100)
    i.add_argument("--seed", type=int, default=0)
    i.set_defaults(func=cmd_identities)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
