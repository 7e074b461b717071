"""Command line front end.

Exit codes: 0 success; 1 a consequence query fails or a proof is not found;
2 malformed input; 3 a resource cap was hit.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .calculus import (
    SeparatorFailure,
    discriminator_from_separators,
    find_separators,
    generate_calculus,
)
from .matrix import (
    ResourceCapError,
    Sequent,
    axiom_consequence_oracle,
    consequence,
    total_refinements,
)
from .proofs import SaturationFailure, prove, render
from .specfile import (
    CalculusFile,
    FileFormatError,
    SpecFile,
    parse_calculus_file,
    parse_matrix_file,
    write_calculus_file,
    write_matrix_file,
)
from .strengthen import sharp_construct, verify_equivalence
from .syntax import ParseError, format_formula, parse_formula

EXIT_OK = 0
EXIT_FAILS = 1
EXIT_INPUT = 2
EXIT_RESOURCE = 3


def _split_formulas(text: str) -> list[str]:
    """Split a comma-separated formula list at top-level commas only."""
    parts: list[str] = []
    depth = 0
    current: list[str] = []
    for c in text:
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        if c == "," and depth == 0:
            parts.append("".join(current))
            current = []
        else:
            current.append(c)
    if current or parts:
        parts.append("".join(current))
    return [p for p in (part.strip() for part in parts) if p]


def _load_matrix(path: str) -> SpecFile:
    return parse_matrix_file(Path(path).read_text())


def _parse_side(text: str | None, sig) -> frozenset:
    if not text:
        return frozenset()
    return frozenset(parse_formula(part, sig) for part in _split_formulas(text))


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_strengthen(args) -> int:
    spec = _load_matrix(args.file)
    if not spec.axioms:
        print("error: input file has no axioms block", file=sys.stderr)
        return EXIT_INPUT
    result = sharp_construct(
        spec.matrix, spec.axioms, det_rexpansion=args.det_rexpansion
    )
    if args.check:
        report = verify_equivalence(
            spec.matrix, spec.axioms, result.matrix, pool_cap=args.pool
        )
        if not report.ok:
            print(
                f"check failed: {len(report.disagreements)} disagreements",
                file=sys.stderr,
            )
            return EXIT_FAILS
    comments = ["strengthened matrix"]
    comments.append(
        "theta: " + " ".join(".".join(w) if w else "<e>" for w in result.theta)
    )
    for i, prof in enumerate(result.profiles):
        trace = " ".join(
            f"{'.'.join(w) if w else '<e>'}->{result.base.labels[v]}"
            for w, v in zip(result.theta, prof)
        )
        comments.append(f"value {result.matrix.labels[i]} = {trace}")
    out_spec = SpecFile(matrix=result.matrix, separators=spec.separators)
    text = write_matrix_file(out_spec, comments)
    _emit(text, args.output)
    return EXIT_OK


def cmd_consequence(args) -> int:
    spec = _load_matrix(args.file)
    sig = spec.matrix.sig
    if args.gamma is None and args.delta is None and spec.queries:
        sequents = spec.queries
    else:
        sequents = [
            Sequent(_parse_side(args.gamma, sig), _parse_side(args.delta, sig))
        ]
    all_hold = True
    for s in sequents:
        if args.axioms_oracle:
            if not spec.axioms:
                print("error: --axioms-oracle needs an axioms block", file=sys.stderr)
                return EXIT_INPUT
            res = axiom_consequence_oracle(
                spec.matrix, spec.axioms, s, universe_depth=args.depth, cap=args.cap
            )
            verdict = "holds" if res.holds else "fails (bounded countermodel)"
            print(f"{s!r}: {verdict}")
            if res.countermodel is not None:
                _print_countermodel(spec.matrix, res.countermodel, s)
            all_hold = all_hold and res.holds
        else:
            res = consequence(spec.matrix, s)
            print(f"{s!r}: {'holds' if res.holds else 'fails'}")
            if res.countermodel is not None:
                _print_countermodel(spec.matrix, res.countermodel, s)
            all_hold = all_hold and res.holds
    return EXIT_OK if all_hold else EXIT_FAILS


def _print_countermodel(m, model, s) -> None:
    from .syntax import sort_key, subformula_closure

    relevant = sorted(subformula_closure(s.gamma | s.delta), key=sort_key)
    for f in relevant:
        if f in model:
            print(f"  {format_formula(f)} = {m.labels[model[f]]}")


def cmd_calculus(args) -> int:
    spec = _load_matrix(args.file)
    if spec.separators:
        disc = discriminator_from_separators(spec.matrix, spec.separators)
    else:
        disc = find_separators(spec.matrix, max_depth=args.max_depth)
    rules = generate_calculus(spec.matrix, disc)
    if spec.separators:
        seps = list(spec.separators)
    else:
        seps = []
        for sep in {s for fam in disc.family.values() for s in fam}:
            if sep.formula not in seps:
                seps.append(sep.formula)
        seps.sort(key=lambda f: format_formula(f))
    text = write_calculus_file(
        CalculusFile(rules=rules, separators=seps),
        ["generated calculus"],
    )
    _emit(text, args.output)
    return EXIT_OK


def cmd_prove(args) -> int:
    calc = parse_calculus_file(Path(args.file).read_text())
    gamma = _parse_side(args.gamma, None)
    delta = _parse_side(args.delta, None)
    s = Sequent(gamma, delta)
    result = prove(calc.rules, calc.separators, s, max_states=args.max_states)
    if isinstance(result, SaturationFailure):
        print(f"{s!r}: no proof")
        state = ", ".join(sorted(format_formula(f) for f in result.state))
        print(f"  saturated state: {state}")
        return EXIT_FAILS
    _emit(render(result, s, fmt=args.render), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    spec = _load_matrix(args.file)
    if not spec.axioms:
        print("error: input file has no axioms block", file=sys.stderr)
        return EXIT_INPUT
    result = sharp_construct(
        spec.matrix, spec.axioms, det_rexpansion=args.det_rexpansion
    )
    report = verify_equivalence(
        spec.matrix,
        spec.axioms,
        result.matrix,
        var_count=args.vars,
        depth=args.depth,
        pool_cap=args.pool,
        oracle_depth=args.oracle_depth,
    )
    print(f"checked {report.checked} sequents over a pool of {len(report.pool)}")
    if report.ok:
        print("no disagreements")
        return EXIT_OK
    for s, sharp_holds, oracle_holds in report.disagreements:
        print(f"  {s!r}: strengthened={sharp_holds} oracle={oracle_holds}")
    return EXIT_FAILS


def cmd_refinements(args) -> int:
    spec = _load_matrix(args.file)
    m = spec.matrix
    for vs in total_refinements(m):
        print("{ " + " ".join(m.labels[v] for v in sorted(vs)) + " }")
    return EXIT_OK


def cmd_separators(args) -> int:
    spec = _load_matrix(args.file)
    m = spec.matrix
    try:
        disc = find_separators(m, max_depth=args.max_depth)
    except SeparatorFailure as exc:
        print(f"no discriminator found: unseparated pairs {exc.pairs}", file=sys.stderr)
        return EXIT_FAILS
    for x in m.values:
        fam = " ".join(format_formula(sep.formula) for sep in disc.family[x])
        om = " ".join(format_formula(f) for f in disc.omega[x])
        mh = " ".join(format_formula(f) for f in disc.mho[x])
        print(f"value {m.labels[x]}: family {{ {fam} }} omega {{ {om} }} mho {{ {mh} }}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pnmatrix",
        description="workbench for finite partial non-deterministic matrices",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="worker cap for parallelizable steps (currently sequential)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("strengthen", help="apply the axiom strengthening")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--det-rexpansion", action="store_true")
    p.add_argument("--check", action="store_true", help="cross-check with the oracle")
    p.add_argument("--pool", type=int, default=6)
    p.set_defaults(func=cmd_strengthen)

    p = sub.add_parser("consequence", help="decide a consequence query")
    p.add_argument("file")
    p.add_argument("--gamma")
    p.add_argument("--delta")
    p.add_argument("--axioms-oracle", action="store_true")
    p.add_argument("--depth", type=int, default=1)
    p.add_argument("--cap", type=int, default=20000)
    p.set_defaults(func=cmd_consequence)

    p = sub.add_parser("calculus", help="generate an analytic calculus")
    p.add_argument("file")
    p.add_argument("-o", "--output")
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(func=cmd_calculus)

    p = sub.add_parser("prove", help="search for an analytic proof")
    p.add_argument("file", help="calculus file (with separators block)")
    p.add_argument("--gamma")
    p.add_argument("--delta")
    p.add_argument("--render", choices=["text", "dot"], default="text")
    p.add_argument("--max-states", type=int, default=200000)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="compare strengthening against the oracle")
    p.add_argument("file")
    p.add_argument("--vars", type=int, default=2)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--pool", type=int, default=6)
    p.add_argument("--oracle-depth", type=int, default=1)
    p.add_argument("--det-rexpansion", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("refinements", help="list maximal total refinements")
    p.add_argument("file")
    p.set_defaults(func=cmd_refinements)

    p = sub.add_parser("separators", help="find a discriminator")
    p.add_argument("file")
    p.add_argument("--max-depth", type=int, default=3)
    p.set_defaults(func=cmd_separators)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileFormatError, ParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
