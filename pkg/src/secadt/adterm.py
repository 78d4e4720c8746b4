"""Algebraic terms for attack-defense trees.

Operators are n-ary and flattened on construction: ``disj(disj(a, b), c)``
builds the same value as ``disj(a, b, c)``. A counteraction whose first
argument is a step atom and whose second is a pattern or a conjunction of
patterns is recognised as a :class:`BADStep` leaf, which is the unit the
scenario, test and verdict layers work with.

Operator codes: ``"or"``, ``"and"``, ``"seq"`` (sequential conjunction) and
``"c"`` (counteraction), each typed by a player, ``"p"`` (proponent) or
``"o"`` (opponent).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from secadt.adtree import ADTree, ATTACK, CONJUNCTIVE, DISJUNCTIVE, SEQUENTIAL, Node
from secadt.errors import (
    LabelNotFoundError,
    MalformedTermError,
    MissingAssignmentError,
    ScenarioLimitError,
)

PROPONENT = "p"
OPPONENT = "o"

OR, AND, SEQ, COUNTER = "or", "and", "seq", "c"

DEFAULT_MAX_SCENARIOS = 10_000

_SYMBOLS = {OR: "∨", AND: "∧", SEQ: "→∧", COUNTER: "c"}


@dataclass(frozen=True)
class Atom:
    label: str
    player: str = PROPONENT

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class BADStep:
    """A step counteracted by one pattern or a conjunction of patterns.

    Techniques are carried as metadata and take no part in equality.
    """

    step: str
    patterns: tuple[str, ...]
    techniques: tuple[str, ...] = field(default=(), compare=False)

    player = PROPONENT

    def __post_init__(self):
        if not self.patterns:
            raise MalformedTermError(f"BADStep {self.step!r} has no defending pattern")

    @property
    def defense(self) -> frozenset[str]:
        return frozenset(self.patterns)

    def as_op(self) -> Op:
        sp = Atom(self.patterns[0], OPPONENT) if len(self.patterns) == 1 else \
            Op(AND, OPPONENT, tuple(Atom(p, OPPONENT) for p in self.patterns))
        return Op(COUNTER, PROPONENT, (Atom(self.step), sp))

    def __str__(self):
        return str(self.as_op())


@dataclass(frozen=True)
class Op:
    op: str
    player: str
    args: tuple

    def __post_init__(self):
        if self.op not in _SYMBOLS:
            raise MalformedTermError(f"unknown operator {self.op!r}")
        if self.op == COUNTER:
            if len(self.args) != 2:
                raise MalformedTermError("counteraction takes exactly two arguments")
            return
        if not self.args:
            raise MalformedTermError(f"{self.op} needs at least one argument")
        flat = []
        for arg in self.args:
            if isinstance(arg, Op) and arg.op == self.op and arg.player == self.player:
                flat.extend(arg.args)
            else:
                flat.append(arg)
        object.__setattr__(self, "args", tuple(flat))

    def __str__(self):
        return f"{_SYMBOLS[self.op]}^{self.player}({', '.join(map(str, self.args))})"


Term = Union[Atom, BADStep, Op]
Leaf = Union[Atom, BADStep]


def _make(op, player, args) -> Term:
    args = tuple(args)
    if len(args) == 1:
        return args[0]
    return Op(op, player, args)


def disj(*args, player=PROPONENT) -> Term:
    return _make(OR, player, args)


def conj(*args, player=PROPONENT) -> Term:
    return _make(AND, player, args)


def seq(*args, player=PROPONENT) -> Term:
    return _make(SEQ, player, args)


def counter(action, defence, player=PROPONENT) -> Term:
    """``c^player(action, defence)``; step/pattern shapes collapse to a BADStep."""
    if player == PROPONENT and isinstance(action, Atom) and action.player == PROPONENT:
        patterns = _pattern_conjunction(defence)
        if patterns:
            return BADStep(action.label, patterns)
    return Op(COUNTER, player, (action, defence))


def _pattern_conjunction(term) -> tuple[str, ...] | None:
    if isinstance(term, Atom) and term.player == OPPONENT:
        return (term.label,)
    if isinstance(term, Op) and term.op == AND and term.player == OPPONENT \
            and all(isinstance(a, Atom) and a.player == OPPONENT for a in term.args):
        return tuple(a.label for a in term.args)
    return None


def normalize(term: Term) -> Term:
    """Rebuild *term* through the factories (flattening, BADStep recognition)."""
    if isinstance(term, Op):
        args = [normalize(a) for a in term.args]
        if term.op == COUNTER:
            return counter(args[0], args[1], term.player)
        return _make(term.op, term.player, args)
    return term


def equivalent(a: Term, b: Term) -> bool:
    """Structural equality up to associative flattening."""
    return normalize(a) == normalize(b)


def leaves(term: Term) -> Iterator[Leaf]:
    if isinstance(term, Op):
        for arg in term.args:
            yield from leaves(arg)
    else:
        yield term


def badsteps(term: Term) -> frozenset[BADStep]:
    return frozenset(iter_badsteps(term))


def iter_badsteps(term: Term) -> Iterator[BADStep]:
    """BADSteps in left-to-right order, first occurrence only."""
    seen = set()
    for leaf in leaves(normalize(term)):
        if isinstance(leaf, BADStep) and leaf not in seen:
            seen.add(leaf)
            yield leaf


def pattern_set(term: Term) -> frozenset[str]:
    """Union of the defences of all BADSteps of *term*."""
    out = set()
    for b in badsteps(term):
        out |= b.defense
    return frozenset(out)


# tree -> term


def to_adterm(tree: ADTree | Node) -> Term:
    root = tree.root if isinstance(tree, ADTree) else tree
    return _node_term(root)


_REFINEMENT_OPS = {DISJUNCTIVE: OR, CONJUNCTIVE: AND, SEQUENTIAL: SEQ}


def _node_term(node: Node) -> Term:
    player = PROPONENT if node.kind == ATTACK else OPPONENT
    if node.counter is not None and node.kind == ATTACK:
        step = _badstep_of(node)
        if step is not None:
            return step
    if node.is_leaf:
        base = Atom(node.label, player)
    else:
        base = _make(_REFINEMENT_OPS[node.refinement], player,
                     [_node_term(c) for c in node.children])
    if node.counter is not None:
        return counter(base, _node_term(node.counter), player)
    return base


def _badstep_of(node: Node) -> BADStep | None:
    if any(not c.is_leaf or c.counter is not None for c in node.children):
        return None
    patterns = _defence_leaves(node.counter)
    if not patterns:
        return None
    return BADStep(node.label, patterns, tuple(c.label for c in node.children))


def _defence_leaves(node: Node) -> tuple[str, ...] | None:
    """Pattern labels of a purely conjunctive defence subtree, else None."""
    if node.counter is not None:
        return None
    if node.is_leaf:
        return (node.label,)
    if node.refinement != CONJUNCTIVE:
        return None
    out: list[str] = []
    for child in node.children:
        sub = _defence_leaves(child)
        if sub is None:
            return None
        out.extend(p for p in sub if p not in out)
    return tuple(out)


# generated form


def generated_form_violation(term: Term) -> Term | None:
    """First sub-term breaking the generated-tree grammar, or None.

    The grammar is ``T ::= or_p(T, ...) | S`` and ``S ::= seq_p(S, ...) | B``
    where ``B`` is a BADStep.
    """
    return _check_t(normalize(term))


def check_generated_form(term: Term) -> bool:
    return generated_form_violation(term) is None


def _check_t(term):
    if isinstance(term, Op) and term.op == OR and term.player == PROPONENT:
        for arg in term.args:
            bad = _check_t(arg)
            if bad is not None:
                return bad
        return None
    return _check_s(term)


def _check_s(term):
    if isinstance(term, BADStep):
        return None
    if isinstance(term, Op) and term.op == SEQ and term.player == PROPONENT:
        for arg in term.args:
            bad = _check_s(arg)
            if bad is not None:
                return bad
        return None
    return term


# substitution and evaluation


def substitute(term: Term, label: str, replacement: Term) -> Term:
    """Replace every attack atom labelled *label* by *replacement*."""
    found = False

    def go(t):
        nonlocal found
        if isinstance(t, Atom):
            if t.label == label and t.player == PROPONENT:
                found = True
                return replacement
            return t
        if isinstance(t, Op):
            args = [go(a) for a in t.args]
            if t.op == COUNTER:
                return counter(args[0], args[1], t.player)
            return _make(t.op, t.player, args)
        return t

    out = go(term)
    if not found:
        raise LabelNotFoundError(f"attack {label!r} does not occur in the term")
    return out


def evaluate(term: Term, assignment: Mapping[Leaf, bool]) -> bool:
    """Truth value of a proponent term under *assignment*; order is ignored."""
    if isinstance(term, Op):
        if term.op == OR:
            return any([evaluate(a, assignment) for a in term.args])
        if term.op in (AND, SEQ):
            return all([evaluate(a, assignment) for a in term.args])
        raise MalformedTermError(f"cannot evaluate counteraction {term}")
    try:
        return bool(assignment[term])
    except KeyError:
        raise MissingAssignmentError(term) from None


# scenarios


@dataclass(frozen=True)
class Scenario:
    """One DNF clause: a term over BADSteps without disjunction."""

    term: Term
    steps: tuple[BADStep, ...]

    @property
    def badsteps(self) -> frozenset[BADStep]:
        return frozenset(self.steps)

    def __str__(self):
        return str(self.term)


def extract_scenarios(term: Term, max_scenarios: int = DEFAULT_MAX_SCENARIOS) -> list[Scenario]:
    """Clauses of the disjunctive normal form of *term* over its BADSteps.

    Sequential conjunction distributes over disjunction keeping the
    left-to-right order. Clauses with the same ordered step sequence are
    merged. Raises :class:`ScenarioLimitError` past *max_scenarios*.
    """
    clauses = _clauses(normalize(term), max_scenarios)
    return [Scenario(t, steps) for t, steps in clauses]


def _clauses(term, limit):
    if isinstance(term, BADStep):
        return [(term, (term,))]
    if isinstance(term, Atom):
        raise MalformedTermError(f"leaf {term.label!r} is not a BADStep; expand the tree first")
    if term.player != PROPONENT or term.op == COUNTER:
        raise MalformedTermError(f"unexpected operator in scenario extraction: {term}")
    parts = [_clauses(a, limit) for a in term.args]
    if term.op == OR:
        merged = [c for part in parts for c in part]
    else:
        combos = [((), ())]
        for part in parts:
            combos = _dedupe([(ts + (t,), steps + more)
                              for ts, steps in combos for t, more in part])
            if len(combos) > limit:
                raise ScenarioLimitError(
                    f"more than {limit} scenarios; raise the ceiling or simplify the tree")
        merged = [(_make(term.op, term.player, ts), steps) for ts, steps in combos]
    out = _dedupe(merged)
    if len(out) > limit:
        raise ScenarioLimitError(f"more than {limit} scenarios; raise the ceiling or simplify the tree")
    return out


def _dedupe(clauses):
    seen = set()
    out = []
    for t, steps in clauses:
        if steps not in seen:
            seen.add(steps)
            out.append((t, steps))
    return out


def scenarios_from_tree(tree: ADTree, max_scenarios: int = DEFAULT_MAX_SCENARIOS) -> list[Scenario]:
    return extract_scenarios(to_adterm(tree), max_scenarios)
