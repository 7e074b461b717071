"""Separators, discriminators, and analytic multiple-conclusion calculi.

A monadic matrix admits, for each pair of distinct values, a single-variable
formula whose value sets at the two points disagree on designation.  From
such a discriminator the matrix's tables and realizability structure compile
into a finite set of schematic premises/conclusions rules that axiomatize
consequence, with proof search confined to separator-closed subformulas.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .matrix import PNMatrix, Sequent, consequence, eval_formula, t_m_contains, total_refinements
from .syntax import (
    App,
    Formula,
    Var,
    format_formula,
    sort_key,
    substitute,
    variables,
)

__all__ = [
    "Separator",
    "Discriminator",
    "SeparatorFailure",
    "MCRule",
    "find_separators",
    "discriminator_from_separators",
    "transfer_discriminator",
    "generate_calculus",
    "simplify",
    "rule_sound",
]


@dataclass(frozen=True)
class Separator:
    """Single-variable formula whose value sets split a pair of values by
    designation."""

    formula: Formula

    def at(self, m: PNMatrix, x: int) -> frozenset[int]:
        return eval_formula(m, self.formula, (x,))

    def __repr__(self) -> str:
        return format_formula(self.formula)


class SeparatorFailure(ValueError):
    """No separator exists for some value pair within the search bound."""

    def __init__(self, pairs: list[tuple[int, int]]):
        self.pairs = pairs
        super().__init__(f"unseparated value pairs: {pairs}")


@dataclass
class Discriminator:
    """Per-value separator families S~_x, split by designation at x.

    ``by_pair`` maps each unordered value pair to the separator found for it;
    ``family`` collects, per value x, the separators of the pairs involving x.
    ``omega``/``mho`` split family(x) by whether the separator designates x.
    """

    matrix: PNMatrix
    by_pair: dict[frozenset[int], Separator]
    family: dict[int, tuple[Separator, ...]]
    omega: dict[int, tuple[Formula, ...]]
    mho: dict[int, tuple[Formula, ...]]

    def omega_at(self, x: int, arg: Formula) -> frozenset[Formula]:
        return frozenset(substitute(f, {1: arg}) for f in self.omega[x])

    def mho_at(self, x: int, arg: Formula) -> frozenset[Formula]:
        return frozenset(substitute(f, {1: arg}) for f in self.mho[x])


def _single_var_formulas(m: PNMatrix, max_depth: int):
    """p1-formulas in search order: depth, then size, then text."""
    levels: list[list[Formula]] = [[Var(1)]]
    levels[0] += sorted(
        (App(name) for name, ar in m.sig.connectives if ar == 0), key=sort_key
    )
    yield from levels[0]
    for d in range(1, max_depth + 1):
        below = [f for lv in levels for f in lv]
        prev = set(levels[d - 1])
        level: set[Formula] = set()
        for name, ar in m.sig.connectives:
            if ar == 0:
                continue
            for args in itertools.product(below, repeat=ar):
                if any(a in prev for a in args):
                    level.add(App(name, args))
        new = sorted(level, key=sort_key)
        levels.append(new)
        yield from new


def _separates(m: PNMatrix, profile: dict[int, frozenset[int]], x: int, y: int) -> bool:
    px, py = profile[x], profile[y]
    if not px or not py:
        return False
    des = m.designated
    x_des = px <= des
    x_undes = px.isdisjoint(des)
    y_des = py <= des
    y_undes = py.isdisjoint(des)
    return (x_des and y_undes) or (x_undes and y_des)


def find_separators(m: PNMatrix, max_depth: int = 3, max_formulas: int = 5000) -> Discriminator:
    """Search single-variable formulas for a separator per value pair.

    Candidates are tried in deterministic order (depth, size, text); a
    candidate is usable only if its value set is non-empty at every value.
    Raises SeparatorFailure when some pair stays unseparated.
    """
    pairs = [
        frozenset({x, y})
        for x, y in itertools.combinations(sorted(m.values), 2)
    ]
    remaining = set(pairs)
    by_pair: dict[frozenset[int], Separator] = {}
    count = 0
    for f in _single_var_formulas(m, max_depth):
        count += 1
        if count > max_formulas or not remaining:
            break
        profile = {x: eval_formula(m, f, (x,)) for x in m.values}
        if any(not profile[x] for x in m.values):
            continue
        sep = Separator(f)
        for pair in sorted(remaining, key=sorted):
            x, y = sorted(pair)
            if _separates(m, profile, x, y):
                by_pair[pair] = sep
                remaining.discard(pair)
    if remaining:
        raise SeparatorFailure(sorted(tuple(sorted(p)) for p in remaining))
    return _assemble(m, by_pair)


def discriminator_from_separators(
    m: PNMatrix, formulas: Sequence[Formula]
) -> Discriminator:
    """Assemble a discriminator from an ordered separator list.

    Each value pair is handled by the first formula in the list that
    separates it, so the per-value families reflect the given order.
    Raises SeparatorFailure when some pair is not separated by any of them.
    """
    seps = [Separator(f) for f in formulas]
    profiles = {
        sep.formula: {x: eval_formula(m, sep.formula, (x,)) for x in m.values}
        for sep in seps
    }
    by_pair: dict[frozenset[int], Separator] = {}
    missing: list[tuple[int, int]] = []
    for x, y in itertools.combinations(sorted(m.values), 2):
        for sep in seps:
            prof = profiles[sep.formula]
            if all(prof[v] for v in m.values) and _separates(m, prof, x, y):
                by_pair[frozenset({x, y})] = sep
                break
        else:
            missing.append((x, y))
    if missing:
        raise SeparatorFailure(missing)
    return _assemble(m, by_pair)


def _assemble(m: PNMatrix, by_pair: dict[frozenset[int], Separator]) -> Discriminator:
    family: dict[int, tuple[Separator, ...]] = {}
    omega: dict[int, tuple[Formula, ...]] = {}
    mho: dict[int, tuple[Formula, ...]] = {}
    ordered_seps: list[Separator] = []
    for pair in sorted(by_pair, key=sorted):
        if by_pair[pair] not in ordered_seps:
            ordered_seps.append(by_pair[pair])
    for x in m.values:
        fam: list[Separator] = []
        for sep in ordered_seps:
            if any(x in pair and by_pair[pair] == sep for pair in by_pair):
                fam.append(sep)
        family[x] = tuple(fam)
        om, mh = [], []
        for sep in fam:
            vals = sep.at(m, x)
            if vals and vals <= m.designated:
                om.append(sep.formula)
            elif vals and vals.isdisjoint(m.designated):
                mh.append(sep.formula)
            else:
                raise SeparatorFailure([(x, x)])
        omega[x] = tuple(om)
        mho[x] = tuple(mh)
    return Discriminator(matrix=m, by_pair=by_pair, family=family, omega=omega, mho=mho)


def transfer_discriminator(
    disc: Discriminator, target: PNMatrix, prefix: Formula
) -> Discriminator:
    """Reuse a discriminator across a strengthening: compose each separator
    with the given p1-formula (separator R becomes S applied to prefix).

    The composed separators are validated against the target matrix; raises
    SeparatorFailure when composition does not separate some pair there.
    """
    by_pair: dict[frozenset[int], Separator] = {}
    composed: dict[Formula, Separator] = {}
    profiles: dict[Formula, dict[int, frozenset[int]]] = {}
    for pair, sep in disc.by_pair.items():
        f = substitute(sep.formula, {1: prefix})
        if f not in composed:
            composed[f] = Separator(f)
            profiles[f] = {x: eval_formula(target, f, (x,)) for x in target.values}
    missing: list[tuple[int, int]] = []
    for x, y in itertools.combinations(sorted(target.values), 2):
        pair = frozenset({x, y})
        found = None
        for f, sep in composed.items():
            if all(profiles[f][v] for v in target.values) and _separates(
                target, profiles[f], x, y
            ):
                found = sep
                break
        if found is None:
            missing.append((x, y))
        else:
            by_pair[pair] = found
    if missing:
        raise SeparatorFailure(missing)
    return _assemble(target, by_pair)


@dataclass(frozen=True)
class MCRule:
    """Schematic multiple-conclusion rule: premises / conclusions."""

    name: str
    premises: frozenset[Formula]
    conclusions: frozenset[Formula]
    tag: str = ""

    def __repr__(self) -> str:
        p = ", ".join(sorted(map(format_formula, self.premises)))
        c = ", ".join(sorted(map(format_formula, self.conclusions)))
        return f"{self.name}: {p} / {c}"

    def rename(self, sigma: Mapping[int, Formula]) -> "MCRule":
        return MCRule(
            self.name,
            frozenset(substitute(f, sigma) for f in self.premises),
            frozenset(substitute(f, sigma) for f in self.conclusions),
            self.tag,
        )


def rule_sound(m: PNMatrix, rule: MCRule) -> bool:
    return consequence(m, Sequent(rule.premises, rule.conclusions)).holds


def _trivial(premises: frozenset[Formula], conclusions: frozenset[Formula]) -> bool:
    return bool(premises & conclusions)


def generate_calculus(m: PNMatrix, disc: Discriminator) -> list[MCRule]:
    """Compile the matrix into rules over the discriminator's separators.

    Produces existence rules (one per value subset's choice structure, kept
    only when non-trivial), designation rules per value, table rules per
    connective entry and excluded outcome, and realizability rules for each
    minimal non-realizable value set.
    """
    rules: list[MCRule] = []
    p = Var(1)

    def add(tag: str, premises: Iterable[Formula], conclusions: Iterable[Formula]):
        prem = frozenset(premises)
        concl = frozenset(conclusions)
        if _trivial(prem, concl):
            return
        rules.append(MCRule(f"{tag}{len(rules) + 1}", prem, concl, tag=tag))

    # existence: for each value subset X, every way of choosing one
    # negative separator per value of X and one positive separator per value
    # outside X gives a rule excluding separator combinations that match no
    # value
    values = sorted(m.values)
    for k in range(len(values) + 1):
        for xs in itertools.combinations(values, k):
            inside = list(xs)
            outside = [y for y in values if y not in xs]
            mho_choices = [
                [substitute(f, {1: p}) for f in disc.mho[x]] for x in inside
            ]
            omega_choices = [
                [substitute(f, {1: p}) for f in disc.omega[y]] for y in outside
            ]
            if any(not c for c in mho_choices) or any(not c for c in omega_choices):
                continue
            for prem in itertools.product(*mho_choices):
                for concl in itertools.product(*omega_choices):
                    add("E", prem, concl)

    # designation: the separators positive at x force (or forbid) the formula
    for x in values:
        om = set(disc.omega_at(x, p))
        mh = set(disc.mho_at(x, p))
        if x in m.designated:
            add("D", om, {p} | mh)
        else:
            add("D", om | {p}, mh)

    # tables: outcome y is impossible at entry (name, xs)
    for name, arity in m.sig.connectives:
        compound = App(name, tuple(Var(i + 1) for i in range(arity)))
        for xs in itertools.product(values, repeat=arity):
            entry = m.entry(name, xs)
            for y in values:
                if y in entry:
                    continue
                premises: set[Formula] = set()
                conclusions: set[Formula] = set()
                for i, x in enumerate(xs):
                    arg = Var(i + 1)
                    premises |= set(disc.omega_at(x, arg))
                    conclusions |= set(disc.mho_at(x, arg))
                premises |= set(disc.omega_at(y, compound))
                conclusions |= set(disc.mho_at(y, compound))
                add("S", premises, conclusions)

    # realizability: minimal value sets outside the realizable structure
    non_t: list[tuple[int, ...]] = []
    for k in range(1, len(values) + 1):
        for xs in itertools.combinations(values, k):
            if t_m_contains(m, xs):
                continue
            if any(set(prev) <= set(xs) for prev in non_t):
                continue
            non_t.append(xs)
    for xs in non_t:
        premises = set()
        conclusions = set()
        for i, x in enumerate(xs):
            arg = Var(i + 1)
            premises |= set(disc.omega_at(x, arg))
            conclusions |= set(disc.mho_at(x, arg))
        add("T", premises, conclusions)

    return simplify(rules, m)


def _canonical(rule: MCRule) -> MCRule:
    """Rename variables by order of first appearance in the sorted formulas."""
    order: dict[int, int] = {}
    for f in sorted(rule.premises | rule.conclusions, key=sort_key):
        for i in sorted(variables(f)):
            if i not in order:
                order[i] = len(order) + 1
    sigma = {i: Var(j) for i, j in order.items()}
    return rule.rename(sigma)


def _subsumes(a: MCRule, b: MCRule) -> bool:
    """a subsumes b when some variable renaming embeds a's sides into b's."""
    a_vars = sorted({i for f in a.premises | a.conclusions for i in variables(f)})
    b_vars = sorted({i for f in b.premises | b.conclusions for i in variables(f)})
    if not a_vars:
        return a.premises <= b.premises and a.conclusions <= b.conclusions
    if not b_vars:
        return False
    for image in itertools.product(b_vars, repeat=len(a_vars)):
        sigma = {i: Var(j) for i, j in zip(a_vars, image)}
        ra = a.rename(sigma)
        if ra.premises <= b.premises and ra.conclusions <= b.conclusions:
            return True
    return False


def simplify(rules: Sequence[MCRule], m: PNMatrix | None = None) -> list[MCRule]:
    """Drop trivial rules, duplicates, and rules subsumed by another rule."""
    seen: set[tuple[frozenset[Formula], frozenset[Formula]]] = set()
    pool: list[MCRule] = []
    for r in rules:
        if _trivial(r.premises, r.conclusions):
            continue
        c = _canonical(r)
        key = (c.premises, c.conclusions)
        if key in seen:
            continue
        seen.add(key)
        pool.append(c)

    kept: list[MCRule] = []
    pool.sort(key=lambda r: (len(r.premises) + len(r.conclusions),
                             sorted(map(format_formula, r.premises | r.conclusions))))
    for i, r in enumerate(pool):
        subsumed = False
        for j, other in enumerate(pool):
            if i == j:
                continue
            if _subsumes(other, r) and not (
                _subsumes(r, other) and j > i
            ):
                subsumed = True
                break
        if not subsumed:
            kept.append(r)
    for idx, r in enumerate(kept, start=1):
        kept[idx - 1] = MCRule(f"{r.tag or 'r'}{idx}", r.premises, r.conclusions, r.tag)
    return kept
