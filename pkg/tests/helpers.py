"""Shared plumbing for the test suite: fixture loading, table comparison,
randomized invariant probes, and sequent suite enumeration."""

import itertools
import random
from pathlib import Path

from pnmatrix import (
    PNMatrix,
    Sequent,
    consequence,
    parse_formula,
    parse_matrix_file,
    sharp_construct,
)
from pnmatrix.matrix import _axiom_theta
from pnmatrix.syntax import (
    App,
    Var,
    apply_string,
    enumerate_formulas,
    sort_key,
    subformula_closure,
    substitute,
    variables,
)

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "pnmatrix" / "fixtures"
GOLDEN = FIXTURES / "golden"

_spec_cache = {}
_sharp_cache = {}


def load_spec(stem):
    if stem not in _spec_cache:
        _spec_cache[stem] = parse_matrix_file((FIXTURES / f"{stem}.lf").read_text())
    return _spec_cache[stem]


def get_sharp(stem, det_rexpansion=False):
    key = (stem, det_rexpansion)
    if key not in _sharp_cache:
        spec = load_spec(stem)
        _sharp_cache[key] = sharp_construct(
            spec.matrix, spec.axioms, det_rexpansion=det_rexpansion
        )
    return _sharp_cache[key]


def table_by_labels(m: PNMatrix, name: str):
    out = {}
    arity = m.sig.arity(name)
    for xs in itertools.product(range(m.n_values), repeat=arity):
        key = tuple(m.labels[x] for x in xs)
        out[key] = frozenset(m.labels[y] for y in m.entry(name, xs))
    return out


def matrix_mismatches(m: PNMatrix, expected) -> list:
    """Compare a matrix against an expected-data record; return differences."""
    problems = []
    if sorted(m.labels) != sorted(expected["values"]):
        problems.append(f"values {sorted(m.labels)} != {sorted(expected['values'])}")
        return problems
    des = sorted(m.labels[v] for v in m.designated)
    if des != sorted(expected["designated"]):
        problems.append(f"designated {des} != {sorted(expected['designated'])}")
    if sorted(m.sig.names) != sorted(expected["tables"]):
        problems.append("connective mismatch")
        return problems
    for name, table in expected["tables"].items():
        got = table_by_labels(m, name)
        for key, want in table.items():
            if got[key] != frozenset(want):
                problems.append(
                    f"{name}{key}: {sorted(got[key])} != {sorted(want)}"
                )
    return problems


def partition_mismatches(m: PNMatrix, disc, expected) -> list:
    """Compare discriminator omega/mho parts against label-keyed expectations."""
    problems = []
    for label, (positive, negative) in expected.items():
        x = m.labels.index(label)
        got_pos = sorted(repr(f) for f in disc.omega[x])
        got_neg = sorted(repr(f) for f in disc.mho[x])
        if got_pos != sorted(positive) or got_neg != sorted(negative):
            problems.append(
                f"value {label}: {got_pos}/{got_neg} != "
                f"{sorted(positive)}/{sorted(negative)}"
            )
    return problems


def formula_pool(sig, var_count=2, depth=2, cap=6):
    """Deterministic prefix of the depth-bounded formula pool."""
    pool = []
    for f in enumerate_formulas(sig, var_count, depth):
        pool.append(f)
        if len(pool) >= cap:
            break
    return pool


def sequent_suite(pool, max_side=2):
    """Every sequent with disjoint sides drawn from the pool, sides <= max_side."""
    sides = [frozenset()]
    for k in range(1, max_side + 1):
        sides.extend(frozenset(c) for c in itertools.combinations(pool, k))
    for gamma in sides:
        for delta in sides:
            if gamma & delta:
                continue
            yield Sequent(gamma, delta)


def bounded_universe(sig, axioms, s: Sequent):
    """The single-round formula universe the bounded oracle reasons over:
    subformula closure of the sequent, its look-ahead images, and axiom
    instances over that closure."""
    theta = _axiom_theta(axioms, sig)
    universe = set(subformula_closure(s.gamma | s.delta))
    new = set()
    for w in theta:
        if w:
            new |= {apply_string(w, f, sig) for f in universe}
    pool = sorted(universe, key=sort_key)
    for b in axioms:
        vs = sorted(variables(b))
        for combo in itertools.product(pool, repeat=len(vs)):
            new.add(substitute(b, dict(zip(vs, combo))))
    return subformula_closure(universe | new)


# ---------------------------------------------------------------------------
# randomized invariant probes
# ---------------------------------------------------------------------------


def random_det_formula(rng: random.Random, sig, var_count=3, depth=3):
    """Random formula over the deterministic subsignature and p1..p<var_count>."""
    det = [(name, ar) for name, ar in sig.connectives if name in sig.det]
    if not det or depth == 0 or (depth < 3 and rng.random() < 0.4):
        return Var(rng.randint(1, var_count))
    name, ar = rng.choice(det)
    return App(
        name,
        tuple(random_det_formula(rng, sig, var_count, depth - 1) for _ in range(ar)),
    )


def set_eval(m: PNMatrix, f, env) -> frozenset:
    """Plain set-valued table evaluation (no refinement confinement)."""
    if isinstance(f, Var):
        return frozenset({env[f.index]})
    out = set()
    arg_sets = [set_eval(m, a, env) for a in f.args]
    for xs in itertools.product(*(sorted(s) for s in arg_sets)):
        out |= m.tables[f.name][xs]
    return frozenset(out)


def designation_agreement_violations(sharp: PNMatrix, rng, probes=1000):
    """Values reached by one deterministic-skeleton evaluation must agree on
    designation.  Returns the violating (formula, env) probes."""
    bad = []
    for _ in range(probes):
        f = random_det_formula(rng, sharp.sig)
        env = {
            i: rng.randrange(sharp.n_values) for i in range(1, 4)
        }
        outs = set_eval(sharp, f, env)
        flags = {v in sharp.designated for v in outs}
        if len(flags) > 1:
            bad.append((f, env))
    return bad


def epsilon_projection_violations(result, rng, probes=1000):
    """Entries of the strengthened matrix must project into base entries at
    the empty look-ahead coordinate (the rexpansion property)."""
    base = result.base
    sharp = result.matrix
    eps = result.theta.index(())
    root = {i: prof[eps] for i, prof in enumerate(result.profiles)}
    bad = []
    for _ in range(probes):
        name, arity = rng.choice(sharp.sig.connectives)
        xs = tuple(rng.randrange(sharp.n_values) for _ in range(arity))
        entry = sharp.tables[name][xs]
        base_entry = base.tables[name][tuple(root[x] for x in xs)]
        if not {root[y] for y in entry} <= base_entry:
            bad.append((name, xs))
    return bad
