"""Formulas, signatures, and axiom decomposition.

Formulas are prefix terms over a finite signature together with propositional
variables p1, p2, ...  A signature distinguishes a deterministic subsignature;
the unary connectives outside it act as look-ahead symbols when axioms are
decomposed into skeleton + look-ahead form.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Union

__all__ = [
    "Var",
    "App",
    "Formula",
    "Signature",
    "ParseError",
    "NotSimpleError",
    "SimpleAxiom",
    "parse_formula",
    "format_formula",
    "variables",
    "subformulas",
    "subformula_closure",
    "substitute",
    "formula_size",
    "formula_depth",
    "apply_string",
    "decompose_simple",
    "lookahead_set",
    "s_subformulas",
    "match",
    "sort_key",
]


@dataclass(frozen=True)
class Var:
    """Propositional variable p<index>, index >= 1."""

    index: int

    def __repr__(self) -> str:
        return f"p{self.index}"


@dataclass(frozen=True)
class App:
    """Connective application in prefix form."""

    name: str
    args: tuple["Formula", ...] = ()

    def __repr__(self) -> str:
        return format_formula(self)


Formula = Union[Var, App]

# A look-ahead string: a tuple of unary connective names, outermost first,
# so ("a", "b") applied to A denotes a(b(A)).
LookaheadString = tuple[str, ...]

_VAR_RE = re.compile(r"p[1-9][0-9]*\Z")
_NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")


class ParseError(ValueError):
    """Raised on malformed formula text; carries a character position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


@dataclass(frozen=True)
class Signature:
    """Connective names with arities, plus a deterministic subsignature.

    ``connectives`` keeps declaration order; ``det`` names the subsignature
    whose tables are required (or declared) deterministic.
    """

    connectives: tuple[tuple[str, int], ...]
    det: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        seen = set()
        for name, arity in self.connectives:
            if not _NAME_RE.match(name) or _VAR_RE.match(name):
                raise ValueError(f"bad connective name: {name!r}")
            if arity < 0:
                raise ValueError(f"negative arity for {name}")
            if name in seen:
                raise ValueError(f"duplicate connective: {name}")
            seen.add(name)
        unknown = self.det - seen
        if unknown:
            raise ValueError(f"det names not in signature: {sorted(unknown)}")

    def arity(self, name: str) -> int:
        for cname, ar in self.connectives:
            if cname == name:
                return ar
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(cname == name for cname, _ in self.connectives)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.connectives)

    @property
    def lookahead_connectives(self) -> tuple[str, ...]:
        """Unary connectives outside the deterministic subsignature."""
        return tuple(
            name for name, ar in self.connectives if ar == 1 and name not in self.det
        )


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "(),":
            tokens.append((c, c, i))
            i += 1
        elif c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    return tokens


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    """Parse prefix formula text; validate names/arities against sig if given."""
    tokens = _tokenize(text)
    pos = 0

    def expect(kind: str):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos][0] != kind:
            at = tokens[pos][2] if pos < len(tokens) else len(text)
            raise ParseError(f"expected {kind!r}", at)
        tok = tokens[pos]
        pos += 1
        return tok

    def term() -> Formula:
        nonlocal pos
        kind, value, at = expect("name")
        if _VAR_RE.match(value):
            return Var(int(value[1:]))
        args: list[Formula] = []
        if pos < len(tokens) and tokens[pos][0] == "(":
            pos += 1
            args.append(term())
            while pos < len(tokens) and tokens[pos][0] == ",":
                pos += 1
                args.append(term())
            expect(")")
        if sig is not None:
            if value not in sig:
                raise ParseError(f"unknown connective {value!r}", at)
            if sig.arity(value) != len(args):
                raise ParseError(
                    f"{value} expects {sig.arity(value)} arguments, got {len(args)}",
                    at,
                )
        return App(value, tuple(args))

    result = term()
    if pos != len(tokens):
        raise ParseError("trailing input", tokens[pos][2])
    return result


def format_formula(f: Formula) -> str:
    if isinstance(f, Var):
        return f"p{f.index}"
    if not f.args:
        return f.name
    return f"{f.name}({','.join(format_formula(a) for a in f.args)})"


def variables(f: Formula) -> frozenset[int]:
    if isinstance(f, Var):
        return frozenset({f.index})
    out: set[int] = set()
    for a in f.args:
        out |= variables(a)
    return frozenset(out)


@lru_cache(maxsize=65536)
def subformulas(f: Formula) -> frozenset[Formula]:
    out = {f}
    if isinstance(f, App):
        for a in f.args:
            out |= subformulas(a)
    return frozenset(out)


def subformula_closure(formulas: Iterable[Formula]) -> frozenset[Formula]:
    out: set[Formula] = set()
    for f in formulas:
        out |= subformulas(f)
    return frozenset(out)


def substitute(f: Formula, sigma: Mapping[int, Formula]) -> Formula:
    if isinstance(f, Var):
        return sigma.get(f.index, f)
    return App(f.name, tuple(substitute(a, sigma) for a in f.args))


@lru_cache(maxsize=65536)
def formula_size(f: Formula) -> int:
    if isinstance(f, Var):
        return 1
    return 1 + sum(formula_size(a) for a in f.args)


def formula_depth(f: Formula) -> int:
    if isinstance(f, Var) or not f.args:
        return 0
    return 1 + max(formula_depth(a) for a in f.args)


def sort_key(f: Formula) -> tuple[int, str]:
    """Deterministic ordering: by size, then by printed form."""
    return (formula_size(f), format_formula(f))


def apply_string(w: LookaheadString, f: Formula, sig: Signature) -> Formula:
    """Apply a look-ahead string outermost first: (b, s...) A = b((s...)A)."""
    for name in w:
        if name not in sig or sig.arity(name) != 1:
            raise ValueError(f"{name!r} is not a unary connective of the signature")
    out = f
    for name in reversed(w):
        out = App(name, (out,))
    return out


def match(pattern: Formula, f: Formula) -> dict[int, Formula] | None:
    """Match f against pattern, treating pattern variables as wildcards."""
    sigma: dict[int, Formula] = {}

    def go(p: Formula, g: Formula) -> bool:
        if isinstance(p, Var):
            bound = sigma.get(p.index)
            if bound is None:
                sigma[p.index] = g
                return True
            return bound == g
        return (
            isinstance(g, App)
            and g.name == p.name
            and len(g.args) == len(p.args)
            and all(go(pa, ga) for pa, ga in zip(p.args, g.args))
        )

    return sigma if go(pattern, f) else None


class NotSimpleError(ValueError):
    """The formula does not decompose over the deterministic subsignature."""


@dataclass(frozen=True)
class SimpleAxiom:
    """An axiom in skeleton + look-ahead form.

    ``structure`` is a formula over the deterministic subsignature whose
    variables are placeholders: Var(1..n) stand for look-ahead occurrences of
    base-connective arguments (q-kind), Var(n+1..n+m) for look-ahead
    occurrences of the full base application (r-kind).  ``q_bindings[i]`` is
    the pair (w_i, j_i): placeholder q_{i+1} denotes w_i applied to argument
    p_{j_i}.  ``r_bindings[l]`` is u_l: placeholder r_{l+1} denotes u_l
    applied to base(p1,...,pk).
    """

    source: Formula
    base: str
    base_arity: int
    structure: Formula
    q_bindings: tuple[tuple[LookaheadString, int], ...]
    r_bindings: tuple[LookaheadString, ...]

    @property
    def theta(self) -> frozenset[LookaheadString]:
        """Prefix closure of all look-ahead strings, including the empty one."""
        out: set[LookaheadString] = {()}
        for w, _ in self.q_bindings:
            for i in range(1, len(w) + 1):
                out.add(w[:i])
        for u in self.r_bindings:
            for i in range(1, len(u) + 1):
                out.add(u[:i])
        return frozenset(out)

    def var_lookaheads(self) -> dict[int, frozenset[LookaheadString]]:
        """For each argument index j, the set of strings it occurs under."""
        out: dict[int, set[LookaheadString]] = {}
        for w, j in self.q_bindings:
            out.setdefault(j, set()).add(w)
        return {j: frozenset(ws) for j, ws in out.items()}

    def reconstruct(self) -> Formula:
        """Substitute bindings back into the skeleton (round-trip check)."""
        n = len(self.q_bindings)
        sigma: dict[int, Formula] = {}
        for i, (w, j) in enumerate(self.q_bindings, start=1):
            sigma[i] = _chain(w, Var(j))
        base_app = App(self.base, tuple(Var(j) for j in range(1, self.base_arity + 1)))
        for l, u in enumerate(self.r_bindings, start=1):
            sigma[n + l] = _chain(u, base_app)
        return substitute(self.structure, sigma)


def _chain(w: LookaheadString, core: Formula) -> Formula:
    out = core
    for name in reversed(w):
        out = App(name, (out,))
    return out


def decompose_simple(formula: Formula, sig: Signature) -> SimpleAxiom:
    """Decompose an axiom into a deterministic skeleton over look-ahead leaves.

    The skeleton is the maximal top part of the formula built from the
    deterministic subsignature.  Each leaf hanging off it must be a string of
    unary non-deterministic connectives ending either in a variable (q-kind)
    or in a connective applied to p1,...,pk in order (r-kind).  Raises
    NotSimpleError when the formula does not have this shape.
    """
    lookahead = set(sig.lookahead_connectives)

    q_leaves: list[tuple[LookaheadString, int]] = []
    r_leaves: list[LookaheadString] = []
    r_base: list[str] = []

    def classify(f: Formula) -> tuple[str, object]:
        # Returns ("q", (w, j)) or ("r", (u, name)).
        prefix: list[str] = []
        node = f
        while isinstance(node, App) and node.name in lookahead and len(node.args) == 1:
            prefix.append(node.name)
            node = node.args[0]
        if isinstance(node, Var):
            return ("q", (tuple(prefix), node.index))
        if isinstance(node, App):
            expected = tuple(Var(j) for j in range(1, len(node.args) + 1))
            if node.args == expected:
                return ("r", (tuple(prefix), node.name))
        raise NotSimpleError(
            f"subformula {format_formula(f)} is not a look-ahead string over a "
            "variable or over the base connective applied to p1,...,pk"
        )

    def skeleton(f: Formula) -> Formula:
        if isinstance(f, App) and f.name in sig.det:
            return App(f.name, tuple(skeleton(a) for a in f.args))
        kind, data = classify(f)
        if kind == "q":
            if data not in q_leaves:
                q_leaves.append(data)  # type: ignore[arg-type]
            return Var(-(q_leaves.index(data) + 1))
        u, name = data  # type: ignore[misc]
        key = (u, name)
        pairs = list(zip(r_leaves, r_base))
        if key not in pairs:
            r_leaves.append(u)
            r_base.append(name)
            pairs.append(key)
        # Temporarily mark r placeholders with large negative indices.
        return Var(-(10**6) - (pairs.index(key) + 1))

    tree = skeleton(formula)

    if len(set(r_base)) > 1:
        raise NotSimpleError(
            f"conflicting base connectives under look-ahead: {sorted(set(r_base))}"
        )

    used_vars = variables(formula)
    if r_base:
        base = r_base[0]
        base_arity = sig.arity(base)
    else:
        need = max(used_vars, default=0)
        candidates = [
            (ar, idx, name)
            for idx, (name, ar) in enumerate(sig.connectives)
            if ar >= need
        ]
        if not candidates:
            raise NotSimpleError(f"no connective of arity >= {need} in the signature")
        _, _, base = min(candidates)
        base_arity = sig.arity(base)
    if used_vars and max(used_vars) > base_arity:
        raise NotSimpleError(
            f"variable p{max(used_vars)} exceeds arity of base connective {base}"
        )

    n = len(q_leaves)

    def renumber(f: Formula) -> Formula:
        if isinstance(f, Var):
            if f.index <= -(10**6):
                return Var(n + (-(f.index) - 10**6))
            return Var(-f.index)
        return App(f.name, tuple(renumber(a) for a in f.args))

    axiom = SimpleAxiom(
        source=formula,
        base=base,
        base_arity=base_arity,
        structure=renumber(tree),
        q_bindings=tuple(q_leaves),
        r_bindings=tuple(r_leaves),
    )
    assert axiom.reconstruct() == formula
    return axiom


def lookahead_set(axioms: Iterable[SimpleAxiom]) -> frozenset[LookaheadString]:
    """Union of the axioms' look-ahead sets; always prefix-closed, contains ()."""
    out: set[LookaheadString] = {()}
    for ax in axioms:
        out |= ax.theta
    return frozenset(out)


def enumerate_formulas(sig: Signature, var_count: int, max_depth: int):
    """Yield all formulas over p1..p<var_count> up to the given depth.

    Deterministic order: depth level by level, each level sorted by size and
    printed form.  Levels can be large; consume lazily.
    """
    levels: list[list[Formula]] = []
    level0: list[Formula] = [Var(i) for i in range(1, var_count + 1)]
    level0 += [App(name) for name, ar in sig.connectives if ar == 0]
    levels.append(sorted(level0, key=sort_key))
    yield from levels[0]
    for d in range(1, max_depth + 1):
        below = [f for lv in levels for f in lv]
        prev = set(levels[d - 1])
        level: set[Formula] = set()
        for name, ar in sig.connectives:
            if ar == 0:
                continue
            for args in itertools.product(below, repeat=ar):
                if any(a in prev for a in args):
                    level.add(App(name, args))
        new = sorted(level, key=sort_key)
        levels.append(new)
        yield from new


def s_subformulas(
    formulas: Iterable[Formula], separators: Iterable[Formula]
) -> frozenset[Formula]:
    """Subformula closure extended by separator images of every subformula.

    Each separator is a single-variable formula in p1; its image on B is the
    substitution p1 -> B.
    """
    base = subformula_closure(formulas)
    out = set(base)
    for s in separators:
        for b in base:
            out.add(substitute(s, {1: b}))
    return frozenset(out)
