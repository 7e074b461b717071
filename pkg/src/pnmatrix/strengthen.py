"""Axiom strengthening of PNmatrices via look-ahead profiles.

Given a matrix whose deterministic subsignature covers the skeletons of a set
of axioms, the strengthened matrix's values are profiles: functions from the
axioms' look-ahead strings to base values, recording not just the value of a
formula but the values of all its relevant look-ahead images.  Consequence in
the strengthened matrix coincides with base consequence under the axiom
constraints.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .matrix import (
    PNMatrix,
    Sequent,
    is_deterministic,
    solve_assignment,
    total_refinements,
)
from .syntax import (
    App,
    Formula,
    LookaheadString,
    SimpleAxiom,
    Var,
    apply_string,
    decompose_simple,
    format_formula,
    lookahead_set,
    match,
    sort_key,
    subformula_closure,
    substitute,
    variables,
)

__all__ = [
    "SharpResult",
    "sharp_construct",
    "sharp_value_naming",
    "sharp_semantic_probe",
    "verify_equivalence",
    "EquivalenceReport",
    "FlatSlice",
    "flat_slice",
    "slice_consequence",
]

Profile = tuple[int, ...]


def _sorted_theta(
    theta: Iterable[LookaheadString], sig_names: Sequence[str]
) -> tuple[LookaheadString, ...]:
    order = {name: i for i, name in enumerate(sig_names)}
    return tuple(sorted(theta, key=lambda w: (len(w), tuple(order[b] for b in w))))


@dataclass
class SharpResult:
    matrix: PNMatrix
    base: PNMatrix
    axioms: tuple[SimpleAxiom, ...]
    theta: tuple[LookaheadString, ...]
    profiles: tuple[Profile, ...]
    kept_coords: tuple[int, ...]

    def profile_of(self, value: int) -> Profile:
        return self.profiles[value]


class _Engine:
    """Shared state for one strengthening run."""

    def __init__(self, m: PNMatrix, axioms: Sequence[SimpleAxiom], det_rexpansion: bool):
        self.m = m
        self.axioms = tuple(axioms)
        self.det_rexpansion = det_rexpansion
        self.theta = _sorted_theta(lookahead_set(axioms), m.sig.names)
        self.idx = {w: i for i, w in enumerate(self.theta)}
        self.lookahead = tuple(
            b for b in m.sig.lookahead_connectives if any(b in w for w in self.theta)
        )
        self.det_names = tuple(sorted(m.sig.det))
        self._reach_cache: dict[frozenset[int], frozenset[int]] = {}

    # -- candidate profiles -------------------------------------------------

    def chain_candidates(self) -> list[Profile]:
        """Profiles extendable to a value chain over all suffixes of theta."""
        suffixes: set[LookaheadString] = set()
        for w in self.theta:
            for i in range(len(w) + 1):
                suffixes.add(w[i:])
        order = sorted(suffixes, key=len)
        found: set[Profile] = set()

        def extend(i: int, h: dict[LookaheadString, int]) -> None:
            if i == len(order):
                found.add(tuple(h[w] for w in self.theta))
                return
            s = order[i]
            if not s:
                choices = self.m.values
            else:
                choices = sorted(self.m.entry(s[0], (h[s[1:]],)))
            for v in choices:
                h[s] = v
                extend(i + 1, h)
            h.pop(s, None)

        extend(0, {})
        return sorted(found)

    # -- set-valued skeleton evaluation --------------------------------------

    def eval_structure(self, structure: Formula, leaf_values: dict[int, int]):
        """Evaluate a deterministic-subsignature skeleton with fixed leaves.

        Returns the set of possible values; with a deterministic subsignature
        this is a singleton or empty, otherwise all values must agree on
        designation (asserted by the caller's violation test).
        """
        if isinstance(structure, Var):
            return frozenset({leaf_values[structure.index]})
        arg_sets = [self.eval_structure(a, leaf_values) for a in structure.args]
        out: set[int] = set()
        for xs in itertools.product(*arg_sets):
            out |= self.m.entry(structure.name, xs)
        return frozenset(out)

    def _violates(self, result: frozenset[int]) -> bool:
        if not result:
            return True
        des = result & self.m.designated
        if des and des != result:
            raise ValueError(
                "deterministic-subsignature tables do not agree on designation; "
                "the matrix is not a designation-respecting rexpansion"
            )
        return not des

    # -- axiom instantiation options -----------------------------------------

    def reach(self, base_values: frozenset[int]) -> frozenset[int]:
        """Closure of a value set under the deterministic-subsignature tables."""
        cached = self._reach_cache.get(base_values)
        if cached is not None:
            return cached
        out = set(base_values)
        grew = True
        while grew:
            grew = False
            for name in self.det_names:
                arity = self.m.sig.arity(name)
                for xs in itertools.product(sorted(out), repeat=arity):
                    new = self.m.entry(name, xs) - out
                    if new:
                        out |= new
                        grew = True
        result = frozenset(out)
        self._reach_cache[base_values] = result
        return result

    def _slot_offsets(
        self, ax: SimpleAxiom, strings: frozenset[LookaheadString], with_r: bool
    ) -> list[LookaheadString]:
        """Offsets w0 such that every needed coordinate lands inside theta."""
        theta_set = set(self.theta)
        out = []
        candidates = {w[i:] for w in self.theta for i in range(len(w) + 1)}
        for w0 in sorted(candidates, key=len):
            if not all(w + w0 in theta_set for w in strings):
                continue
            if with_r and not all(
                u + (ax.base,) + w0 in theta_set for u in ax.r_bindings
            ):
                continue
            out.append(w0)
        return out

    def cooccurrence_violation(self, hosts: Sequence[Profile]) -> bool:
        """Whether some axiom instance over the hosts' traces fails.

        Variables whose look-ahead set is exactly the empty string range over
        the deterministic-closure of the hosts' profile values; other
        variables range over host/offset slots.  Axioms with full-application
        placeholders participate only when the base connective is unary (the
        placeholder value is then a slot coordinate itself).
        """
        host_list = sorted(set(hosts))
        base_values = frozenset(v for f in host_list for v in f)
        for ax in self.axioms:
            var_look = ax.var_lookaheads()
            occurring = sorted(set(var_look) | (
                set(range(1, ax.base_arity + 1)) if ax.r_bindings else set()
            ))
            if not occurring:
                # ground axiom: single instance
                leaf_values: dict[int, int] = {}
                if ax.r_bindings:
                    continue
                if self._violates(self.eval_structure(ax.structure, leaf_values)):
                    return True
                continue
            if ax.r_bindings and ax.base_arity != 1:
                # full-application placeholders with a wider base are only
                # checkable at the base connective's own entries
                continue
            options: list[list[dict]] = []
            feasible = True
            for j in occurring:
                strings = var_look.get(j, frozenset())
                opts: list[dict] = []
                if strings <= {()} and not ax.r_bindings:
                    for x in sorted(self.reach(base_values)):
                        opts.append({(): x})
                else:
                    for f in host_list:
                        for w0 in self._slot_offsets(ax, strings, bool(ax.r_bindings)):
                            table: dict = {}
                            for w in strings:
                                table[w] = f[self.idx[w + w0]]
                            for u in ax.r_bindings:
                                table[("r", u)] = f[self.idx[u + (ax.base,) + w0]]
                            if table not in opts:
                                opts.append(table)
                if not opts:
                    feasible = False
                    break
                options.append(opts)
            if not feasible:
                continue
            n = len(ax.q_bindings)
            for combo in itertools.product(*options):
                chosen = dict(zip(occurring, combo))
                leaf_values = {}
                for i, (w, j) in enumerate(ax.q_bindings, start=1):
                    leaf_values[i] = chosen[j][w]
                for l, u in enumerate(ax.r_bindings, start=1):
                    leaf_values[n + l] = chosen[1][("r", u)]
                if self._violates(self.eval_structure(ax.structure, leaf_values)):
                    return True
        return False

    # -- table entry conditions ----------------------------------------------

    def entry_candidates(
        self, name: str, args: tuple[Profile, ...], pool: Sequence[Profile]
    ) -> frozenset[Profile]:
        arity = self.m.sig.arity(name)
        root = self.m.entry(name, tuple(f[self.idx[()]] for f in args))
        out = []
        for g in pool:
            if g[self.idx[()]] not in root:
                continue
            if arity == 1 and name in self.m.sig.lookahead_connectives:
                # shift: the image's trace at u is the argument's at u+name
                ok = True
                for u in self.theta:
                    shifted = u + (name,)
                    if shifted in self.idx and g[self.idx[u]] != args[0][self.idx[shifted]]:
                        ok = False
                        break
                if not ok:
                    continue
            if self._base_entry_violation(name, args, g):
                continue
            if self.cooccurrence_violation(tuple(args) + (g,)):
                continue
            out.append(g)
        return frozenset(out)

    def _base_entry_violation(
        self, name: str, args: tuple[Profile, ...], g: Profile
    ) -> bool:
        """Direct axiom instances at the axiom's own base-connective entry."""
        for ax in self.axioms:
            if ax.base != name or self.m.sig.arity(name) != ax.base_arity:
                continue
            leaf_values: dict[int, int] = {}
            n = len(ax.q_bindings)
            ok = True
            for i, (w, j) in enumerate(ax.q_bindings, start=1):
                if w not in self.idx:
                    ok = False
                    break
                leaf_values[i] = args[j - 1][self.idx[w]]
            if not ok:
                continue
            for l, u in enumerate(ax.r_bindings, start=1):
                leaf_values[n + l] = g[self.idx[u]]
            if self._violates(self.eval_structure(ax.structure, leaf_values)):
                return True
        return False


def _as_simple(
    axioms: Sequence[Formula | SimpleAxiom], m: PNMatrix
) -> tuple[SimpleAxiom, ...]:
    out = []
    for ax in axioms:
        out.append(ax if isinstance(ax, SimpleAxiom) else decompose_simple(ax, m.sig))
    return tuple(out)


def sharp_construct(
    m: PNMatrix,
    axioms: Sequence[Formula | SimpleAxiom],
    det_rexpansion: bool = False,
) -> SharpResult:
    """Build the axiom-strengthened matrix over look-ahead profiles.

    Candidate values are the chain-consistent profiles surviving single-value
    axiom pruning; tables obey the root condition, the shift identity for
    unary look-ahead connectives, direct axiom instances at base-connective
    entries, and co-occurrence instances over each entry's participants.  The
    prunings are iterated to a joint fixpoint: a profile also dies when some
    entry it must support (its look-ahead successors, its diagonals) empties.
    """
    simple = _as_simple(axioms, m)
    if not det_rexpansion and not is_deterministic(m, sorted(m.sig.det)):
        raise ValueError(
            "deterministic subsignature has non-deterministic entries; "
            "pass det_rexpansion=True if the matrix is a designation-respecting "
            "rexpansion of a deterministic one"
        )
    eng = _Engine(m, simple, det_rexpansion)
    cands = [f for f in eng.chain_candidates() if not eng.cooccurrence_violation([f])]

    connectives = m.sig.connectives
    while True:
        tables: dict[tuple[str, tuple[Profile, ...]], frozenset[Profile]] = {}
        for name, arity in connectives:
            for args in itertools.product(cands, repeat=arity):
                tables[(name, args)] = eng.entry_candidates(name, args, cands)

        # joint-realizability: a value g is only a legitimate outcome of an
        # entry when every entry over the participants is inhabited
        changed = True
        while changed:
            changed = False
            for (name, args), entry in list(tables.items()):
                keep = set()
                for g in entry:
                    hosts = sorted(set(args) | {g})
                    ok = all(
                        tables[(n2, t2)]
                        for n2, a2 in connectives
                        for t2 in itertools.product(hosts, repeat=a2)
                    )
                    if ok:
                        keep.add(g)
                if len(keep) != len(entry):
                    tables[(name, args)] = frozenset(keep)
                    changed = True

        dead = set()
        for f in cands:
            for name, arity in connectives:
                if not tables[(name, (f,) * arity)]:
                    dead.add(f)
                    break
        if not dead:
            break
        cands = [f for f in cands if f not in dead]

    profiles = tuple(cands)
    value_of = {f: i for i, f in enumerate(profiles)}
    eps = eng.idx[()]
    kept = _kept_coordinates(eng, profiles)
    labels = _labels(m, eng, profiles, kept)
    out_tables: dict[str, dict[tuple[int, ...], frozenset[int]]] = {}
    for name, arity in connectives:
        table = {}
        for args in itertools.product(profiles, repeat=arity):
            table[tuple(value_of[a] for a in args)] = frozenset(
                value_of[g] for g in tables[(name, args)]
            )
        out_tables[name] = table
    designated = {i for i, f in enumerate(profiles) if f[eps] in m.designated}
    sharp = PNMatrix(m.sig, labels, designated, out_tables)
    return SharpResult(
        matrix=sharp,
        base=m,
        axioms=simple,
        theta=eng.theta,
        profiles=profiles,
        kept_coords=kept,
    )


def _kept_coordinates(eng: _Engine, profiles: Sequence[Profile]) -> tuple[int, ...]:
    """Coordinates needed for naming: drop deterministic-prefix strings and
    duplicate columns; fall back to all coordinates if names would collide."""
    kept: list[int] = []
    for i, w in enumerate(eng.theta):
        if w and is_deterministic(eng.m, [w[0]]):
            continue
        column = tuple(f[i] for f in profiles)
        if any(tuple(f[j] for f in profiles) == column for j in kept):
            continue
        kept.append(i)
    names = {tuple(f[i] for i in kept) for f in profiles}
    if len(names) != len(profiles):
        kept = list(range(len(eng.theta)))
    return tuple(kept)


def _labels(
    m: PNMatrix, eng: _Engine, profiles: Sequence[Profile], kept: Sequence[int]
) -> list[str]:
    parts = [[m.labels[f[i]] for i in kept] for f in profiles]
    if all(len(p) == 1 for row in parts for p in row):
        return ["".join(row) for row in parts]
    # the dot keeps multi-character labels tokenizable in matrix files
    return [".".join(row) for row in parts]


def sharp_value_naming(result: SharpResult) -> dict[int, str]:
    """Value index -> display label of the strengthened matrix."""
    return {i: result.matrix.labels[i] for i in result.matrix.values}


def sharp_semantic_probe(
    m: PNMatrix,
    axioms: Sequence[Formula | SimpleAxiom],
    depth: int = 2,
    var_count: int = 1,
    cap: int = 400,
) -> frozenset[Profile]:
    """Profiles witnessed by bounded assignments under the axiom constraints.

    Builds a formula universe (depth-bounded formulas closed under look-ahead
    strings), and reports every profile realized at some universe formula by a
    table-respecting assignment designating all axiom instances found inside
    the universe.  A sound lower bound for the strengthened value set.
    """
    from .syntax import enumerate_formulas

    simple = _as_simple(axioms, m)
    theta = _sorted_theta(lookahead_set(simple), m.sig.names)
    pool = list(enumerate_formulas(m.sig, var_count, depth))
    universe: set[Formula] = set(subformula_closure(pool))
    for w in theta:
        if w:
            universe |= {apply_string(w, f, m.sig) for f in pool}
    universe = set(subformula_closure(universe))
    if len(universe) > cap:
        universe = set(sorted(universe, key=sort_key)[:cap])
        universe = set(subformula_closure(universe))
    sources = [ax.source for ax in simple]
    instances = {
        f for f in universe if any(match(b, f) is not None for b in sources)
    }
    ordered = sorted(universe, key=sort_key)
    anchors = [
        f
        for f in sorted(pool, key=sort_key)
        if all(apply_string(w, f, m.sig) in universe for w in theta)
    ]
    witnessed: set[Profile] = set()
    candidate_profiles = _Engine(m, simple, det_rexpansion=True).chain_candidates()
    for vs in total_refinements(m):
        des = frozenset(m.designated & vs)
        base_pins = {f: des for f in instances}
        for anchor in anchors:
            for prof in candidate_profiles:
                if prof in witnessed:
                    continue
                if not all(v in vs for v in prof):
                    continue
                pins = dict(base_pins)
                ok = True
                for w, v in zip(theta, prof):
                    f = apply_string(w, anchor, m.sig)
                    pins[f] = pins.get(f, frozenset(vs)) & frozenset({v})
                    if not pins[f]:
                        ok = False
                        break
                if not ok:
                    continue
                if solve_assignment(m, ordered, vs, pins) is not None:
                    witnessed.add(prof)
    return frozenset(witnessed)


@dataclass
class EquivalenceReport:
    checked: int
    disagreements: list[tuple[Sequent, bool, bool]]
    pool: list[Formula]

    @property
    def ok(self) -> bool:
        return not self.disagreements


def verify_equivalence(
    m: PNMatrix,
    axioms: Sequence[Formula | SimpleAxiom],
    sharp: PNMatrix,
    var_count: int = 2,
    depth: int = 2,
    pool_cap: int = 6,
    max_side: int = 2,
    oracle_depth: int = 1,
    oracle_cap: int = 20000,
    escalate_depth: int = 2,
    escalate_arg_size: int = 3,
) -> EquivalenceReport:
    """Compare strengthened-matrix consequence against the bounded axiom oracle
    on every sequent over a deterministic formula pool prefix.

    An oracle "fails" answer is only a bounded countermodel, so when it
    contradicts a "holds" from the strengthened matrix the oracle is retried
    with more instantiation rounds (over small formulas only); the sequent
    counts as a disagreement if the countermodel survives.
    """
    from .matrix import axiom_consequence_oracle, consequence
    from .syntax import enumerate_formulas

    simple = _as_simple(axioms, m)
    sources = [ax.source for ax in simple]
    pool = []
    for f in enumerate_formulas(m.sig, var_count, depth):
        pool.append(f)
        if len(pool) >= pool_cap:
            break
    sides = [frozenset(c) for k in range(max_side + 1) for c in itertools.combinations(pool, k)]
    disagreements = []
    checked = 0
    for gamma in sides:
        for delta in sides:
            s = Sequent(gamma, delta)
            checked += 1
            a = consequence(sharp, s).holds
            b = axiom_consequence_oracle(
                m, sources, s, universe_depth=oracle_depth, cap=oracle_cap
            ).holds
            if a and not b and escalate_depth > oracle_depth:
                b = axiom_consequence_oracle(
                    m,
                    sources,
                    s,
                    universe_depth=escalate_depth,
                    cap=oracle_cap,
                    arg_size_cap=escalate_arg_size,
                ).holds
            if a != b:
                disagreements.append((s, a, b))
    return EquivalenceReport(checked=checked, disagreements=disagreements, pool=pool)


@dataclass
class FlatSlice:
    """Finite slice of the pair construction over an explicit formula universe.

    Values are pairs (base value, formula); pairs whose formula is an axiom
    instance only exist for designated base values.  Table entries compose the
    formula components, so entries whose composite leaves the universe are
    empty: that is a slice artifact, and consequence over the slice therefore
    goes through slice_consequence rather than the generic decision procedure.
    """

    matrix: PNMatrix
    base: PNMatrix
    pairs: tuple[tuple[int, Formula], ...]
    universe: tuple[Formula, ...]
    axioms: tuple[Formula, ...]

    def pair_index(self, x: int, f: Formula) -> int:
        return self.pairs.index((x, f))


def flat_slice(
    m: PNMatrix, axioms: Sequence[Formula], universe: Iterable[Formula]
) -> FlatSlice:
    ordered = sorted(subformula_closure(universe), key=sort_key)
    instances = {
        f for f in ordered if any(match(b, f) is not None for b in axioms)
    }
    pairs: list[tuple[int, Formula]] = []
    for f in ordered:
        for x in m.values:
            if f in instances and x not in m.designated:
                continue
            pairs.append((x, f))
    index = {p: i for i, p in enumerate(pairs)}
    labels = [f"{m.labels[x]}@{format_formula(f)}" for x, f in pairs]
    designated = {i for i, (x, _) in enumerate(pairs) if x in m.designated}
    tables: dict[str, dict[tuple[int, ...], frozenset[int]]] = {}
    for name, arity in m.sig.connectives:
        table = {}
        for combo in itertools.product(range(len(pairs)), repeat=arity):
            xs = tuple(pairs[i][0] for i in combo)
            composite = App(name, tuple(pairs[i][1] for i in combo))
            entry = set()
            for y in m.entry(name, xs):
                j = index.get((y, composite))
                if j is not None:
                    entry.add(j)
            table[combo] = frozenset(entry)
        tables[name] = table
    slice_m = PNMatrix(m.sig, labels, designated, tables)
    return FlatSlice(
        matrix=slice_m,
        base=m,
        pairs=tuple(pairs),
        universe=tuple(ordered),
        axioms=tuple(axioms),
    )


def slice_consequence(fs: FlatSlice, s: Sequent) -> bool:
    """Consequence over the slice: assignments send each universe formula to a
    pair carrying that very formula, respecting the slice tables."""
    missing = subformula_closure(s.gamma | s.delta) - set(fs.universe)
    if missing:
        raise ValueError(
            f"sequent leaves the slice universe: {sorted(map(format_formula, missing))}"
        )
    if s.gamma & s.delta:
        return True
    m = fs.base
    pair_ids: dict[Formula, frozenset[int]] = {}
    for i, (x, f) in enumerate(fs.pairs):
        pair_ids[f] = pair_ids.get(f, frozenset()) | {i}
    for vs in total_refinements(m):
        allowed = frozenset(
            i for i, (x, _) in enumerate(fs.pairs) if x in vs
        )
        des = frozenset(i for i in allowed if i in fs.matrix.designated)
        undes = allowed - des
        pins: dict[Formula, frozenset[int]] = {}
        ok = True
        for f in fs.universe:
            pins[f] = pair_ids[f] & allowed
            if not pins[f]:
                ok = False
                break
        if not ok:
            continue
        for f in s.gamma:
            pins[f] &= des
            ok = ok and bool(pins[f])
        for f in s.delta:
            pins[f] &= undes
            ok = ok and bool(pins[f])
        if not ok:
            continue
        sol = solve_assignment(fs.matrix, list(fs.universe), allowed, pins)
        if sol is not None:
            return False
    return True
