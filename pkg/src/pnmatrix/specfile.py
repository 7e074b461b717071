"""Text formats for matrices and calculi.

Matrix files carry a signature, the deterministic subsignature, labelled
values, the designated subset, one table per connective, and optional axioms,
separators, and query blocks.  ``#`` starts a line comment; whitespace is
insignificant.  Calculus files carry an optional separators block and one
block per rule.  Writers emit a canonical layout so outputs are stable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .calculus import MCRule
from .matrix import PNMatrix, Sequent
from .syntax import App, Formula, Signature, Var, format_formula

__all__ = [
    "SpecFile",
    "CalculusFile",
    "FileFormatError",
    "parse_matrix_file",
    "write_matrix_file",
    "parse_calculus_file",
    "write_calculus_file",
]


class FileFormatError(ValueError):
    pass


@dataclass
class SpecFile:
    matrix: PNMatrix
    axioms: list[Formula] = field(default_factory=list)
    separators: list[Formula] = field(default_factory=list)
    queries: list[Sequent] = field(default_factory=list)


@dataclass
class CalculusFile:
    rules: list[MCRule]
    separators: list[Formula] = field(default_factory=list)


_SPECIALS = "{}(),"
_VAR_RE = re.compile(r"p[1-9][0-9]*\Z")


def _tokenize(text: str) -> list[tuple[str, int]]:
    tokens: list[tuple[str, int]] = []
    line = 1
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            i += 1
        elif c.isspace():
            i += 1
        elif c == "#":
            while i < n and text[i] != "\n":
                i += 1
        elif c in _SPECIALS:
            tokens.append((c, line))
            i += 1
        elif text.startswith("->", i):
            tokens.append(("->", line))
            i += 2
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in _SPECIALS + "#" \
                    and not text.startswith("->", j):
                j += 1
            tokens.append((text[i:j], line))
            i = j
    return tokens


class _Reader:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def line(self) -> int:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos][1]
        return self.tokens[-1][1] if self.tokens else 1

    def next(self) -> str:
        if self.pos >= len(self.tokens):
            raise FileFormatError("unexpected end of file")
        tok = self.tokens[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, tok: str) -> None:
        got = self.next()
        if got != tok:
            raise FileFormatError(f"line {self.line()}: expected {tok!r}, got {got!r}")

    def formula(self, sig: Signature | None = None) -> Formula:
        name = self.next()
        if name in _SPECIALS or name == "->":
            raise FileFormatError(f"line {self.line()}: expected formula, got {name!r}")
        if _VAR_RE.match(name):
            return Var(int(name[1:]))
        args: list[Formula] = []
        if self.peek() == "(":
            self.next()
            args.append(self.formula(sig))
            while self.peek() == ",":
                self.next()
                args.append(self.formula(sig))
            self.expect(")")
        if sig is not None:
            if name not in sig:
                raise FileFormatError(f"line {self.line()}: unknown connective {name!r}")
            if sig.arity(name) != len(args):
                raise FileFormatError(
                    f"line {self.line()}: {name} expects {sig.arity(name)} arguments"
                )
        return App(name, tuple(args))

    def formula_block(self, sig: Signature | None) -> list[Formula]:
        self.expect("{")
        out = []
        while self.peek() != "}":
            out.append(self.formula(sig))
        self.expect("}")
        return out


def parse_matrix_file(text: str) -> SpecFile:
    r = _Reader(text)
    sig_entries: list[tuple[str, int]] = []
    det: list[str] = []
    labels: list[str] = []
    designated: list[str] = []
    tables: dict[str, dict[tuple[int, ...], frozenset[int]]] = {}
    axioms: list[Formula] = []
    separators: list[Formula] = []
    queries: list[Sequent] = []
    sig: Signature | None = None

    def label_index(tok: str) -> int:
        if tok not in labels:
            raise FileFormatError(f"line {r.line()}: unknown value {tok!r}")
        return labels.index(tok)

    while r.peek() is not None:
        head = r.next()
        if head == "signature":
            r.expect("{")
            while r.peek() != "}":
                tok = r.next()
                if "/" not in tok:
                    raise FileFormatError(
                        f"line {r.line()}: expected name/arity, got {tok!r}"
                    )
                name, _, ar = tok.rpartition("/")
                if not ar.isdigit():
                    raise FileFormatError(f"line {r.line()}: bad arity in {tok!r}")
                sig_entries.append((name, int(ar)))
            r.expect("}")
        elif head == "det":
            r.expect("{")
            while r.peek() != "}":
                det.append(r.next())
            r.expect("}")
        elif head == "values":
            r.expect("{")
            while r.peek() != "}":
                labels.append(r.next())
            r.expect("}")
        elif head == "designated":
            r.expect("{")
            while r.peek() != "}":
                designated.append(r.next())
            r.expect("}")
        elif head == "table":
            name = r.next()
            r.expect("{")
            table: dict[tuple[int, ...], frozenset[int]] = {}
            while r.peek() != "}":
                r.expect("(")
                key: list[int] = []
                if r.peek() != ")":
                    key.append(label_index(r.next()))
                    while r.peek() == ",":
                        r.next()
                        key.append(label_index(r.next()))
                r.expect(")")
                r.expect("->")
                r.expect("{")
                entry: set[int] = set()
                while r.peek() != "}":
                    tok = r.next()
                    if tok == ",":
                        continue
                    entry.add(label_index(tok))
                r.expect("}")
                table[tuple(key)] = frozenset(entry)
            r.expect("}")
            tables[name] = table
        elif head == "axioms":
            axioms.extend(r.formula_block(None))
        elif head == "separators":
            separators.extend(r.formula_block(None))
        elif head == "query":
            r.expect("{")
            gamma: list[Formula] = []
            delta: list[Formula] = []
            while r.peek() != "}":
                side = r.next()
                if side == "gamma":
                    gamma = r.formula_block(None)
                elif side == "delta":
                    delta = r.formula_block(None)
                else:
                    raise FileFormatError(
                        f"line {r.line()}: expected gamma or delta, got {side!r}"
                    )
            r.expect("}")
            queries.append(Sequent(frozenset(gamma), frozenset(delta)))
        else:
            raise FileFormatError(f"line {r.line()}: unknown block {head!r}")

    if not sig_entries:
        raise FileFormatError("missing signature block")
    if not labels:
        raise FileFormatError("missing values block")
    try:
        sig = Signature(tuple(sig_entries), frozenset(det))
        matrix = PNMatrix(
            sig, labels, [labels.index(d) for d in designated], tables
        )
    except ValueError as exc:
        raise FileFormatError(str(exc)) from exc
    for f in axioms + separators:
        _validate_formula(f, sig)
    for q in queries:
        for f in q.gamma | q.delta:
            _validate_formula(f, sig)
    return SpecFile(matrix=matrix, axioms=axioms, separators=separators, queries=queries)


def _validate_formula(f: Formula, sig: Signature) -> None:
    if isinstance(f, Var):
        return
    if f.name not in sig or sig.arity(f.name) != len(f.args):
        raise FileFormatError(f"formula uses unknown connective {f.name!r}")
    for a in f.args:
        _validate_formula(a, sig)


def _entry_text(m: PNMatrix, name: str, xs: tuple[int, ...]) -> str:
    key = ",".join(m.labels[x] for x in xs)
    out = ",".join(m.labels[y] for y in sorted(m.entry(name, xs)))
    return f"({key})->{{{out}}}"


def write_matrix_file(
    spec: SpecFile, header_comments: Sequence[str] = ()
) -> str:
    import itertools as _it

    m = spec.matrix
    lines: list[str] = [f"# {c}" for c in header_comments]
    lines.append(
        "signature { " + " ".join(f"{n}/{a}" for n, a in m.sig.connectives) + " }"
    )
    if m.sig.det:
        ordered = [n for n, _ in m.sig.connectives if n in m.sig.det]
        lines.append("det { " + " ".join(ordered) + " }")
    lines.append("values { " + " ".join(m.labels) + " }")
    lines.append(
        "designated { " + " ".join(m.labels[v] for v in sorted(m.designated)) + " }"
    )
    for name, arity in m.sig.connectives:
        if arity <= 1:
            entries = " ".join(
                _entry_text(m, name, xs)
                for xs in _it.product(range(m.n_values), repeat=arity)
            )
            lines.append(f"table {name} {{ {entries} }}")
        else:
            lines.append(f"table {name} {{")
            for first in range(m.n_values):
                row = " ".join(
                    _entry_text(m, name, (first,) + rest)
                    for rest in _it.product(range(m.n_values), repeat=arity - 1)
                )
                lines.append(f"  {row}")
            lines.append("}")
    if spec.axioms:
        lines.append("axioms {")
        for f in spec.axioms:
            lines.append(f"  {format_formula(f)}")
        lines.append("}")
    if spec.separators:
        lines.append("separators {")
        for f in spec.separators:
            lines.append(f"  {format_formula(f)}")
        lines.append("}")
    for q in spec.queries:
        lines.append("query {")
        lines.append(
            "  gamma { " + " ".join(sorted(format_formula(f) for f in q.gamma)) + " }"
        )
        lines.append(
            "  delta { " + " ".join(sorted(format_formula(f) for f in q.delta)) + " }"
        )
        lines.append("}")
    return "\n".join(lines) + "\n"


def parse_calculus_file(text: str) -> CalculusFile:
    r = _Reader(text)
    rules: list[MCRule] = []
    separators: list[Formula] = []
    while r.peek() is not None:
        head = r.next()
        if head == "separators":
            separators.extend(r.formula_block(None))
        elif head == "rule":
            name = r.next()
            r.expect("{")
            premises: list[Formula] = []
            conclusions: list[Formula] = []
            while r.peek() != "}":
                side = r.next()
                if side == "premises":
                    premises = r.formula_block(None)
                elif side == "conclusions":
                    conclusions = r.formula_block(None)
                else:
                    raise FileFormatError(
                        f"line {r.line()}: expected premises or conclusions, got {side!r}"
                    )
            r.expect("}")
            rules.append(
                MCRule(name, frozenset(premises), frozenset(conclusions))
            )
        else:
            raise FileFormatError(f"line {r.line()}: unknown block {head!r}")
    if len({r_.name for r_ in rules}) != len(rules):
        raise FileFormatError("duplicate rule names")
    return CalculusFile(rules=rules, separators=separators)


def write_calculus_file(
    calc: CalculusFile, header_comments: Sequence[str] = ()
) -> str:
    from .syntax import sort_key

    lines: list[str] = [f"# {c}" for c in header_comments]
    if calc.separators:
        lines.append(
            "separators { "
            + " ".join(format_formula(f) for f in calc.separators)
            + " }"
        )
    for rule in calc.rules:
        prem = " ".join(format_formula(f) for f in sorted(rule.premises, key=sort_key))
        concl = " ".join(
            format_formula(f) for f in sorted(rule.conclusions, key=sort_key)
        )
        lines.append(f"rule {rule.name} {{")
        lines.append(f"  premises {{ {prem} }}".replace("{  }", "{ }"))
        lines.append(f"  conclusions {{ {concl} }}".replace("{  }", "{ }"))
        lines.append("}")
    return "\n".join(lines) + "\n"
