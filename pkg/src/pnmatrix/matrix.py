"""Partial non-deterministic matrices and multiple-conclusion consequence.

A PNmatrix interprets each connective by a total map from value tuples to
*sets* of values; an empty set marks a partiality gap.  Valuations are the
legal assignments of the union of all total simple refinements, so
consequence is decided refinement by refinement.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .syntax import (
    App,
    Formula,
    Signature,
    SimpleAxiom,
    Var,
    apply_string,
    decompose_simple,
    format_formula,
    formula_size,
    lookahead_set,
    match,
    sort_key,
    subformula_closure,
    substitute,
    variables,
)

__all__ = [
    "PNMatrix",
    "Sequent",
    "ConsequenceResult",
    "OracleResult",
    "ExpansionFunction",
    "ResourceCapError",
    "is_total",
    "is_deterministic",
    "simple_refinement",
    "total_refinements",
    "t_m_contains",
    "eval_formula",
    "consequence",
    "axiom_consequence_oracle",
    "expand",
    "refine",
    "solve_assignment",
]

Entry = frozenset[int]
Table = dict[tuple[int, ...], Entry]


class ResourceCapError(RuntimeError):
    """A configured size or node cap was exceeded."""


class PNMatrix:
    """Finite PNmatrix: labelled values, designated subset, per-connective tables.

    Values are handled as indices 0..n-1 internally; ``labels`` carries the
    display names.  Instances are treated as immutable.
    """

    def __init__(
        self,
        sig: Signature,
        labels: Sequence[str],
        designated: Iterable[int],
        tables: Mapping[str, Mapping[tuple[int, ...], Iterable[int]]],
    ):
        self.sig = sig
        self.labels = tuple(labels)
        self.n_values = len(self.labels)
        self.designated = frozenset(designated)
        self.tables: dict[str, Table] = {}
        self._validate_and_freeze(tables)
        self._refinements_cache: list[frozenset[int]] | None = None

    def _validate_and_freeze(self, tables) -> None:
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate value labels")
        values = range(self.n_values)
        if not self.designated <= set(values):
            raise ValueError("designated values out of range")
        for name, arity in self.sig.connectives:
            if name not in tables:
                raise ValueError(f"missing table for {name}")
            table: Table = {}
            for xs in itertools.product(values, repeat=arity):
                if xs not in tables[name]:
                    raise ValueError(f"table {name} missing entry {xs}")
                entry = frozenset(tables[name][xs])
                if not entry <= set(values):
                    raise ValueError(f"table {name}{xs} has values out of range")
                table[xs] = entry
            if len(tables[name]) != len(table):
                raise ValueError(f"table {name} has extra entries")
            self.tables[name] = table
        extra = set(tables) - set(self.sig.names)
        if extra:
            raise ValueError(f"tables for unknown connectives: {sorted(extra)}")
        # the det declaration is not enforced here: a strengthened matrix may
        # be only a rexpansion of a deterministic one on the det names

    def label(self, value: int) -> str:
        return self.labels[value]

    def value(self, label: str) -> int:
        return self.labels.index(label)

    def entry(self, name: str, xs: tuple[int, ...]) -> Entry:
        return self.tables[name][xs]

    @property
    def values(self) -> range:
        return range(self.n_values)

    def __repr__(self) -> str:
        return (
            f"PNMatrix({self.n_values} values, "
            f"designated={{{', '.join(self.labels[v] for v in sorted(self.designated))}}})"
        )


def is_total(m: PNMatrix, names: Iterable[str] | None = None) -> bool:
    names = m.sig.names if names is None else tuple(names)
    return all(
        entry for name in names for entry in m.tables[name].values()
    )


def is_deterministic(m: PNMatrix, names: Iterable[str] | None = None) -> bool:
    names = m.sig.names if names is None else tuple(names)
    return all(
        len(entry) <= 1 for name in names for entry in m.tables[name].values()
    )


def simple_refinement(m: PNMatrix, keep: Iterable[int]) -> PNMatrix:
    """Restrict to a value subset: drop values, intersect every entry."""
    kept = sorted(set(keep))
    if not set(kept) <= set(m.values):
        raise ValueError("refinement values out of range")
    old_to_new = {v: i for i, v in enumerate(kept)}
    tables: dict[str, dict[tuple[int, ...], frozenset[int]]] = {}
    for name, arity in m.sig.connectives:
        table = {}
        for xs in itertools.product(kept, repeat=arity):
            new_xs = tuple(old_to_new[x] for x in xs)
            table[new_xs] = frozenset(
                old_to_new[y] for y in m.tables[name][xs] if y in old_to_new
            )
        tables[name] = table
    return PNMatrix(
        m.sig,
        [m.labels[v] for v in kept],
        [old_to_new[v] for v in m.designated if v in old_to_new],
        tables,
    )


def _subset_total(m: PNMatrix, vs: frozenset[int]) -> bool:
    for name, arity in m.sig.connectives:
        for xs in itertools.product(sorted(vs), repeat=arity):
            if not (m.tables[name][xs] & vs):
                return False
    return True


def total_refinements(m: PNMatrix) -> list[frozenset[int]]:
    """Maximal value subsets whose simple refinement is total and non-empty.

    Found by branching on the witnesses of empty restricted entries.
    """
    if m._refinements_cache is not None:
        return list(m._refinements_cache)

    totals: set[frozenset[int]] = set()
    seen: set[frozenset[int]] = set()

    def explore(vs: frozenset[int]) -> None:
        if not vs or vs in seen:
            return
        seen.add(vs)
        for name, arity in m.sig.connectives:
            for xs in itertools.product(sorted(vs), repeat=arity):
                if not (m.tables[name][xs] & vs):
                    # Only dropping an argument value can remove this gap;
                    # a nullary gap is unfixable by shrinking.
                    for v in sorted(set(xs)):
                        explore(vs - {v})
                    return
        totals.add(vs)

    explore(frozenset(m.values))
    maximal = [
        vs for vs in totals if not any(vs < other for other in totals)
    ]
    maximal.sort(key=lambda vs: (-len(vs), sorted(vs)))
    m._refinements_cache = maximal
    return list(maximal)


def t_m_contains(m: PNMatrix, xs: Iterable[int]) -> bool:
    """Whether the value set is jointly realizable (inside some total refinement)."""
    xset = frozenset(xs)
    return any(xset <= vs for vs in total_refinements(m))


def _topological(universe: Iterable[Formula]) -> list[Formula]:
    return sorted(universe, key=sort_key)


def solve_assignment(
    m: PNMatrix,
    universe: Sequence[Formula],
    allowed: frozenset[int],
    pins: Mapping[Formula, frozenset[int]] | None = None,
    node_cap: int = 10**7,
) -> dict[Formula, int] | None:
    """Find a table-respecting assignment of the (sub-closed) universe.

    ``allowed`` restricts the value range (a refinement), ``pins`` further
    restricts individual formulas.  Uses domain propagation over the
    parent/child table constraints, then backtracking.  Returns None when no
    assignment exists within the given restrictions.
    """
    universe = _topological(universe)
    pins = pins or {}

    parents: dict[Formula, list[App]] = {f: [] for f in universe}
    for f in universe:
        if isinstance(f, App):
            for a in f.args:
                parents[a].append(f)

    domains: dict[Formula, frozenset[int]] = {}
    for f in universe:
        d = allowed & pins.get(f, allowed)
        domains[f] = frozenset(d)

    def propagate(doms: dict[Formula, frozenset[int]]) -> bool:
        # Hyper-arc consistency over each application's table constraint.
        work = True
        while work:
            work = False
            for f in universe:
                if not isinstance(f, App):
                    if not doms[f]:
                        return False
                    continue
                table = m.tables[f.name]
                feasible_out: set[int] = set()
                feasible_in: list[set[int]] = [set() for _ in f.args]
                for xs in itertools.product(*(sorted(doms[a]) for a in f.args)):
                    # repeated subformulas must agree
                    consistent = True
                    seen: dict[Formula, int] = {}
                    for a, x in zip(f.args, xs):
                        if seen.setdefault(a, x) != x:
                            consistent = False
                            break
                    if not consistent:
                        continue
                    out = table[xs] & doms[f]
                    if out:
                        feasible_out |= out
                        for i, x in enumerate(xs):
                            feasible_in[i].add(x)
                if feasible_out != doms[f]:
                    doms[f] = frozenset(feasible_out)
                    work = True
                if not doms[f]:
                    return False
                for a, fi in zip(f.args, feasible_in):
                    new = doms[a] & fi
                    if new != doms[a]:
                        doms[a] = frozenset(new)
                        work = True
                        if not new:
                            return False
        return all(doms[f] for f in universe)

    if not propagate(domains):
        return None

    def pick(doms: dict[Formula, frozenset[int]]) -> Formula | None:
        for f in universe:
            if len(doms[f]) > 1:
                return f
        return None

    # iterative backtracking: one stack frame per branching decision
    target = pick(domains)
    if target is None:
        return {f: next(iter(domains[f])) for f in universe}
    nodes = 0
    stack = [(domains, target, iter(sorted(domains[target])))]
    while stack:
        doms, target, options = stack[-1]
        for v in options:
            nodes += 1
            if nodes > node_cap:
                raise ResourceCapError("assignment search node cap exceeded")
            trial = dict(doms)
            trial[target] = frozenset({v})
            if not propagate(trial):
                continue
            nxt = pick(trial)
            if nxt is None:
                return {f: next(iter(trial[f])) for f in universe}
            stack.append((trial, nxt, iter(sorted(trial[nxt]))))
            break
        else:
            stack.pop()
    return None


def eval_formula(m: PNMatrix, f: Formula, point: tuple[int, ...]) -> frozenset[int]:
    """All values the formula can take when its variables get the point values.

    Only assignments living inside some total refinement count, and the
    refinement must accommodate the point itself.
    """
    used = variables(f)
    if used and max(used) > len(point):
        raise ValueError("point too short for formula variables")
    universe = sorted(subformula_closure([f]), key=sort_key)
    out: set[int] = set()
    for vs in total_refinements(m):
        if not all(point[i - 1] in vs for i in used):
            continue
        pins = {Var(i): frozenset({point[i - 1]}) for i in used}
        for v in sorted(vs):
            if v in out:
                continue
            trial = dict(pins)
            trial[f] = trial.get(f, frozenset(vs)) & frozenset({v})
            if not trial[f]:
                continue
            sol = solve_assignment(m, universe, vs, trial)
            if sol is not None:
                out.add(v)
    return frozenset(out)


@dataclass(frozen=True)
class Sequent:
    gamma: frozenset[Formula]
    delta: frozenset[Formula]

    def __repr__(self) -> str:
        g = ", ".join(sorted(format_formula(f) for f in self.gamma))
        d = ", ".join(sorted(format_formula(f) for f in self.delta))
        return f"{g} |> {d}"


@dataclass
class ConsequenceResult:
    holds: bool
    countermodel: dict[Formula, int] | None = None
    refinement: frozenset[int] | None = None
    empty_semantics: bool = False


def consequence(m: PNMatrix, s: Sequent) -> ConsequenceResult:
    """Decide whether every valuation designating all of gamma designates
    some formula of delta; on failure return a witnessing countermodel."""
    if s.gamma & s.delta:
        return ConsequenceResult(holds=True)
    universe = sorted(subformula_closure(s.gamma | s.delta), key=sort_key)
    refinements = total_refinements(m)
    if not refinements:
        return ConsequenceResult(holds=True, empty_semantics=True)
    for vs in refinements:
        des = frozenset(m.designated & vs)
        undes = frozenset(vs - m.designated)
        pins: dict[Formula, frozenset[int]] = {}
        for g in s.gamma:
            pins[g] = des
        for d in s.delta:
            pins[d] = undes
        sol = solve_assignment(m, universe, vs, pins)
        if sol is not None:
            return ConsequenceResult(holds=False, countermodel=sol, refinement=vs)
    return ConsequenceResult(holds=True)


@dataclass(frozen=True)
class ExpansionFunction:
    """Maps each value to a non-empty set of new-value indices; images disjoint."""

    images: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for img in self.images:
            if not img:
                raise ValueError("expansion image must be non-empty")
            if img & seen:
                raise ValueError("expansion images must be disjoint")
            seen |= img

    def contraction(self) -> dict[int, int]:
        out = {}
        for v, img in enumerate(self.images):
            for w in img:
                out[w] = v
        return out


def expand(m: PNMatrix, e: ExpansionFunction, labels: Sequence[str]) -> PNMatrix:
    """Expansion: new values refine old ones; each entry lifts along e."""
    if len(e.images) != m.n_values:
        raise ValueError("expansion function arity mismatch")
    contraction = e.contraction()
    if sorted(contraction) != list(range(len(labels))):
        raise ValueError("expansion images must cover exactly the new value range")
    tables: dict[str, dict[tuple[int, ...], frozenset[int]]] = {}
    for name, arity in m.sig.connectives:
        table = {}
        for xs in itertools.product(range(len(labels)), repeat=arity):
            old = tuple(contraction[x] for x in xs)
            out: set[int] = set()
            for y in m.tables[name][old]:
                out |= e.images[y]
            table[xs] = frozenset(out)
        tables[name] = table
    designated = {w for w in range(len(labels)) if contraction[w] in m.designated}
    return PNMatrix(m.sig, labels, designated, tables)


def refine(
    m: PNMatrix,
    entries: Mapping[tuple[str, tuple[int, ...]], Iterable[int]],
) -> PNMatrix:
    """General refinement: shrink selected entries (each must stay a subset)."""
    tables = {name: dict(table) for name, table in m.tables.items()}
    for (name, xs), new in entries.items():
        new_set = frozenset(new)
        if not new_set <= tables[name][xs]:
            raise ValueError(f"refinement enlarges entry {name}{xs}")
        tables[name][xs] = new_set
    return PNMatrix(m.sig, m.labels, m.designated, tables)


@dataclass
class OracleResult:
    holds: bool
    exact: bool
    countermodel: dict[Formula, int] | None = None
    universe_size: int = 0


def _axiom_theta(axioms: Sequence[Formula], sig: Signature):
    try:
        simple = [decompose_simple(b, sig) for b in axioms]
        return sorted(lookahead_set(simple), key=lambda w: (len(w), w))
    except Exception:
        return [()]


def axiom_consequence_oracle(
    m: PNMatrix,
    axioms: Sequence[Formula],
    s: Sequent,
    universe_depth: int = 1,
    cap: int = 4000,
    arg_size_cap: int | None = None,
) -> OracleResult:
    """Bounded decision for consequence in the presence of axiom constraints.

    Builds a finite formula universe (subformula closure, look-ahead strings,
    axiom instances over the universe, for the given number of rounds) and
    searches for an assignment designating all axiom instances found inside
    the universe plus gamma while undesignating delta.  "holds" answers are
    exact (more constraints only shrink the countermodel space); "fails"
    answers are candidates, since a bounded countermodel may not extend.

    ``arg_size_cap`` limits instantiation to universe formulas of at most
    that size, which keeps multi-round universes tractable.
    """
    if s.gamma & s.delta:
        return OracleResult(holds=True, exact=True)
    theta = _axiom_theta(axioms, m.sig)
    universe = set(subformula_closure(s.gamma | s.delta))
    for _ in range(universe_depth):
        new: set[Formula] = set()
        for w in theta:
            if not w:
                continue
            for f in universe:
                new.add(apply_string(w, f, m.sig))
        pool = sorted(
            (
                f
                for f in universe
                if arg_size_cap is None or formula_size(f) <= arg_size_cap
            ),
            key=sort_key,
        )
        for b in axioms:
            vs = sorted(variables(b))
            for combo in itertools.product(pool, repeat=len(vs)):
                new.add(substitute(b, dict(zip(vs, combo))))
                if len(new) + len(universe) > cap:
                    raise ResourceCapError("oracle universe cap exceeded")
        universe = set(subformula_closure(universe | new))
        if len(universe) > cap:
            raise ResourceCapError("oracle universe cap exceeded")

    instances = {
        f for f in universe if any(match(b, f) is not None for b in axioms)
    }
    ordered = sorted(universe, key=sort_key)
    refinements = total_refinements(m)
    if not refinements:
        return OracleResult(holds=True, exact=True, universe_size=len(universe))
    for vs in refinements:
        des = frozenset(m.designated & vs)
        undes = frozenset(vs - m.designated)
        pins: dict[Formula, frozenset[int]] = {}
        ok = True
        for f in instances | s.gamma:
            pins[f] = pins.get(f, vs) & des
            if not pins[f]:
                ok = False
        for f in s.delta:
            pins[f] = pins.get(f, vs) & undes
            if not pins[f]:
                ok = False
        if not ok:
            continue
        sol = solve_assignment(m, ordered, vs, pins)
        if sol is not None:
            return OracleResult(
                holds=False, exact=False, countermodel=sol, universe_size=len(universe)
            )
    return OracleResult(holds=True, exact=True, universe_size=len(universe))
