"""Analytic proof search and checking for multiple-conclusion calculi.

A proof of gamma |> delta is a tree: each inner node applies a rule instance
whose premises all occur in the branch state (gamma plus the conclusions
picked up along the branch) and opens one child per conclusion; a branch ends
when its state meets delta (a goal leaf) or when an empty-conclusion instance
fires (a closed leaf).  Search is confined to the separator-closed
subformulas of the sequent, which is what makes it terminate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .calculus import MCRule
from .matrix import ResourceCapError, Sequent
from .syntax import (
    Formula,
    format_formula,
    s_subformulas,
    sort_key,
    substitute,
    variables,
)

__all__ = [
    "Goal",
    "Closed",
    "Expansion",
    "ProofTree",
    "SaturationFailure",
    "prove",
    "check_proof",
    "render",
]


@dataclass(frozen=True)
class Goal:
    """Branch end: the goal formula is in the branch state and in delta."""

    formula: Formula


@dataclass(frozen=True)
class Closed:
    """Branch end: an empty-conclusion rule instance fired."""

    rule: str
    subst: tuple[tuple[int, Formula], ...]


@dataclass(frozen=True)
class Expansion:
    rule: str
    subst: tuple[tuple[int, Formula], ...]
    children: tuple[tuple[Formula, "ProofTree"], ...]


ProofTree = Union[Goal, Closed, Expansion]


@dataclass
class SaturationFailure:
    """No proof: a saturated state not meeting delta (a countermodel trace)."""

    state: frozenset[Formula]


@dataclass(frozen=True)
class _Instance:
    rule: str
    subst: tuple[tuple[int, Formula], ...]
    premises: frozenset[Formula]
    conclusions: frozenset[Formula]


def _instances(
    rules: Sequence[MCRule], universe: Sequence[Formula]
) -> list[_Instance]:
    """All rule instances living entirely inside the universe, in rule order
    then lexicographic substitution order."""
    uset = set(universe)
    out: list[_Instance] = []
    seen: set[tuple[str, frozenset[Formula], frozenset[Formula]]] = set()
    for rule in rules:
        vs = sorted({i for f in rule.premises | rule.conclusions for i in variables(f)})
        for combo in itertools.product(universe, repeat=len(vs)):
            sigma = dict(zip(vs, combo))
            prem = frozenset(substitute(f, sigma) for f in rule.premises)
            concl = frozenset(substitute(f, sigma) for f in rule.conclusions)
            if not (prem <= uset and concl <= uset):
                continue
            if prem & concl:
                continue
            key = (rule.name, prem, concl)
            if key in seen:
                continue
            seen.add(key)
            out.append(
                _Instance(rule.name, tuple(sorted(sigma.items())), prem, concl)
            )
    return out


def prove(
    rules: Sequence[MCRule],
    separators: Iterable[Formula],
    s: Sequent,
    max_states: int = 200000,
) -> ProofTree | SaturationFailure:
    """Search for an analytic proof of the sequent.

    Returns a proof tree, or a SaturationFailure carrying a state closed
    under all applicable rule instances that avoids delta.  Raises
    ResourceCapError when the state budget runs out.
    """
    universe = sorted(s_subformulas(s.gamma | s.delta, separators), key=sort_key)
    instances = _instances(rules, universe)
    closers = [inst for inst in instances if not inst.conclusions]
    expanders = [inst for inst in instances if inst.conclusions]

    memo: dict[frozenset[Formula], ProofTree | None] = {}
    visited = 0
    saturated: list[frozenset[Formula]] = []

    def search(state: frozenset[Formula]) -> ProofTree | None:
        nonlocal visited
        cached = memo.get(state, Ellipsis)
        if cached is not Ellipsis:
            return cached
        visited += 1
        if visited > max_states:
            raise ResourceCapError("proof search state cap exceeded")
        hit = state & s.delta
        if hit:
            tree: ProofTree | None = Goal(min(hit, key=sort_key))
            memo[state] = tree
            return tree
        for inst in closers:
            if inst.premises <= state:
                tree = Closed(inst.rule, inst.subst)
                memo[state] = tree
                return tree
        memo[state] = None  # cut cycles: revisiting the same state fails
        progressed = False
        for inst in expanders:
            if not inst.premises <= state:
                continue
            if inst.conclusions & state:
                continue
            progressed = True
            children = []
            ok = True
            for c in sorted(inst.conclusions, key=sort_key):
                sub = search(state | {c})
                if sub is None:
                    ok = False
                    break
                children.append((c, sub))
            if ok:
                tree = Expansion(inst.rule, inst.subst, tuple(children))
                memo[state] = tree
                return tree
        if not progressed:
            saturated.append(state)
        return None

    result = search(frozenset(s.gamma))
    if result is not None:
        return result
    return SaturationFailure(saturated[0] if saturated else frozenset(s.gamma))


def check_proof(
    tree: ProofTree,
    rules: Sequence[MCRule],
    separators: Iterable[Formula],
    s: Sequent,
    require_analytic: bool = True,
) -> tuple[bool, list[str]]:
    """Validate a proof tree against a calculus and a sequent.

    Checks rule instantiation, premise availability along each branch, one
    child per conclusion, branch termination, and (optionally) that every
    formula stays inside the separator-closed subformulas of the sequent.
    """
    by_name = {r.name: r for r in rules}
    universe = s_subformulas(s.gamma | s.delta, separators)
    problems: list[str] = []

    def note(msg: str) -> None:
        problems.append(msg)

    def instantiate(rule: MCRule, subst: tuple[tuple[int, Formula], ...]):
        sigma = dict(subst)
        prem = frozenset(substitute(f, sigma) for f in rule.premises)
        concl = frozenset(substitute(f, sigma) for f in rule.conclusions)
        return prem, concl

    def walk(node: ProofTree, state: frozenset[Formula]) -> None:
        if isinstance(node, Goal):
            if node.formula not in s.delta:
                note(f"goal {format_formula(node.formula)} is not a conclusion of the sequent")
            if node.formula not in state:
                note(f"goal {format_formula(node.formula)} not available in branch state")
            return
        rule = by_name.get(node.rule)
        if rule is None:
            note(f"unknown rule {node.rule}")
            return
        prem, concl = instantiate(rule, node.subst)
        if not prem <= state:
            missing = sorted(map(format_formula, prem - state))
            note(f"rule {node.rule}: premises not in branch state: {missing}")
        if require_analytic and not (prem | concl) <= universe:
            out = sorted(map(format_formula, (prem | concl) - universe))
            note(f"rule {node.rule}: formulas outside the analytic bound: {out}")
        if isinstance(node, Closed):
            if concl:
                note(f"rule {node.rule} used as closure but has conclusions")
            return
        child_formulas = frozenset(c for c, _ in node.children)
        if child_formulas != concl:
            note(
                f"rule {node.rule}: children {sorted(map(format_formula, child_formulas))} "
                f"do not match conclusions {sorted(map(format_formula, concl))}"
            )
        if len(node.children) != len(child_formulas):
            note(f"rule {node.rule}: duplicate child conclusions")
        for c, sub in node.children:
            walk(sub, state | {c})

    walk(tree, frozenset(s.gamma))
    return (not problems, problems)


def _subst_text(subst: tuple[tuple[int, Formula], ...]) -> str:
    if not subst:
        return ""
    inner = ", ".join(f"p{i}:={format_formula(f)}" for i, f in subst)
    return f" [{inner}]"


def render(tree: ProofTree, s: Sequent, fmt: str = "text") -> str:
    """Deterministic text or dot rendering of a proof tree."""
    if fmt == "text":
        lines = [f"prove {s!r}"]

        def go(node: ProofTree, indent: int) -> None:
            pad = "  " * indent
            if isinstance(node, Goal):
                lines.append(f"{pad}goal {format_formula(node.formula)}")
            elif isinstance(node, Closed):
                lines.append(f"{pad}* closed by {node.rule}{_subst_text(node.subst)}")
            else:
                lines.append(f"{pad}apply {node.rule}{_subst_text(node.subst)}")
                for c, sub in node.children:
                    lines.append(f"{pad}case {format_formula(c)}:")
                    go(sub, indent + 1)

        go(tree, 1)
        return "\n".join(lines) + "\n"
    if fmt == "dot":
        lines = ["digraph proof {", '  node [shape=box];']
        counter = itertools.count()

        def go(node: ProofTree) -> int:
            nid = next(counter)
            if isinstance(node, Goal):
                label = f"goal {format_formula(node.formula)}"
                lines.append(f'  n{nid} [label="{label}"];')
            elif isinstance(node, Closed):
                lines.append(f'  n{nid} [label="* {node.rule}"];')
            else:
                lines.append(f'  n{nid} [label="{node.rule}"];')
                for c, sub in node.children:
                    cid = go(sub)
                    lines.append(f'  n{nid} -> n{cid} [label="{format_formula(c)}"];')
            return nid

        go(tree)
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown render format {fmt!r}")
