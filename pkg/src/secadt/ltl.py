"""LTL formulas over method-call events, and their finite-trace evaluation.

Text syntax (one property per line in property files)::

    G("InterceptingValidator.validate" -> F "ValidatorURL.create")

Operators: ``G`` (always), ``F`` (eventually), ``not``, ``and``, ``xor``,
``or``, ``->``. Binding from tightest to loosest: unary operators, ``and``,
``xor``, ``or``, ``->`` (right associative). Atoms are double-quoted event
labels; ``\\"`` and ``\\\\`` escape inside them.

Finite-trace semantics, positions ``0 <= i < n`` of a trace of length n:
an atom holds at i iff the event at i equals its label; ``G f`` holds at i
iff f holds at every j >= i; ``F f`` iff f holds at some j >= i; boolean
operators are pointwise. A trace satisfies a formula iff it holds at the
first position. On the empty trace ``G`` is vacuously true, ``F`` and atoms
are false.
"""

from __future__ import annotations

import re
from array import array
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from secadt import _backend
from secadt.errors import LtlSyntaxError


@dataclass(frozen=True)
class Var:
    label: str


@dataclass(frozen=True)
class Not:
    arg: Formula


@dataclass(frozen=True)
class Always:
    arg: Formula


@dataclass(frozen=True)
class Eventually:
    arg: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Xor:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


Formula = Union[Var, Not, Always, Eventually, And, Or, Xor, Implies]

UNARY = (Not, Always, Eventually)
BINARY = (And, Or, Xor, Implies)

_ASCII_BINARY = {And: "and", Or: "or", Xor: "xor", Implies: "->"}
_SYMBOLIC_BINARY = {And: "and", Or: "or", Xor: "xor", Implies: "→"}
_SYMBOLIC_UNARY = {Not: "¬", Always: "□", Eventually: "◇"}


def alphabet(formula: Formula) -> frozenset[str]:
    return frozenset(v.label for v in subformulas(formula) if isinstance(v, Var))


def subformulas(formula: Formula):
    """Post-order walk, children before parents."""
    if isinstance(formula, UNARY):
        yield from subformulas(formula.arg)
    elif isinstance(formula, BINARY):
        yield from subformulas(formula.left)
        yield from subformulas(formula.right)
    yield formula


def has_negation(formula: Formula) -> bool:
    return any(isinstance(f, Not) for f in subformulas(formula))


def rename(formula: Formula, mapping) -> Formula:
    """Replace atom labels through *mapping*; unmapped atoms are kept."""
    if isinstance(formula, Var):
        return Var(mapping.get(formula.label, formula.label))
    if isinstance(formula, UNARY):
        return type(formula)(rename(formula.arg, mapping))
    return type(formula)(rename(formula.left, mapping), rename(formula.right, mapping))


@dataclass(frozen=True)
class LtlProperty:
    """A generated or parsed property with where it came from."""

    formula: Formula
    rule: str = ""
    location: str = ""

    @property
    def alphabet(self) -> frozenset[str]:
        return alphabet(self.formula)

    def __str__(self):
        return to_text(self.formula)


# printing


def _quote(label: str) -> str:
    return '"' + label.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_text(formula: Formula) -> str:
    """Canonical text form; ``parse_ltl(to_text(f)) == f``."""
    if isinstance(formula, Var):
        return _quote(formula.label)
    if isinstance(formula, (Always, Eventually)):
        op = "G" if isinstance(formula, Always) else "F"
        arg = formula.arg
        if isinstance(arg, BINARY):
            return f"{op}({to_text(arg)})"
        return f"{op} {to_text(arg)}"
    if isinstance(formula, Not):
        if isinstance(formula.arg, BINARY):
            return f"not ({to_text(formula.arg)})"
        return f"not {to_text(formula.arg)}"
    return f"{_ascii_operand(formula.left)} {_ASCII_BINARY[type(formula)]} {_ascii_operand(formula.right)}"


def _ascii_operand(f: Formula) -> str:
    if isinstance(f, (BINARY + (Not,))):
        return f"({to_text(f)})"
    return to_text(f)


def to_symbolic(formula: Formula) -> str:
    """Mathematical rendering, e.g. ``□(a → ◇b)``."""
    if isinstance(formula, Var):
        return formula.label
    if isinstance(formula, UNARY):
        sym = _SYMBOLIC_UNARY[type(formula)]
        if isinstance(formula.arg, BINARY):
            return f"{sym}({to_symbolic(formula.arg)})"
        return sym + to_symbolic(formula.arg)
    parts = []
    for side in (formula.left, formula.right):
        text = to_symbolic(side)
        parts.append(f"({text})" if isinstance(side, BINARY) else text)
    return f"{parts[0]} {_SYMBOLIC_BINARY[type(formula)]} {parts[1]}"


# parsing

_TOKEN = re.compile(r'\s*(?:(?P<str>"(?:[^"\\]|\\.)*")|(?P<arrow>->)|(?P<paren>[()])|(?P<word>[A-Za-z_]+)|(?P<bad>\S))')
_KEYWORDS = {"G", "F", "not", "and", "or", "xor"}


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        value = m.group(kind)
        if kind == "bad":
            if value == '"':
                raise LtlSyntaxError("unterminated atom", start)
            raise LtlSyntaxError(f"unexpected character {value!r}", start)
        if kind == "str":
            value = re.sub(r"\\(.)", r"\1", value[1:-1], flags=re.S)
        elif kind == "word" and value not in _KEYWORDS:
            raise LtlSyntaxError(f"unknown word {value!r}; atoms must be double-quoted", start)
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value or kind == "str":
            raise LtlSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def parse(self):
        f = self.implication()
        kind, val, pos = self.peek()
        if kind != "end":
            raise LtlSyntaxError(f"unexpected {val!r}", pos)
        return f

    def implication(self):
        left = self.binary(0)
        kind, val, _ = self.peek()
        if kind == "arrow":
            self.take()
            return Implies(left, self.implication())
        return left

    _LEVELS = (("or", Or), ("xor", Xor), ("and", And))

    def binary(self, level):
        if level == len(self._LEVELS):
            return self.unary()
        word, cls = self._LEVELS[level]
        left = self.binary(level + 1)
        while self.peek()[0] == "word" and self.peek()[1] == word:
            self.take()
            left = cls(left, self.binary(level + 1))
        return left

    def unary(self):
        kind, val, pos = self.take()
        if kind == "str":
            if not val:
                raise LtlSyntaxError("empty atom", pos)
            return Var(val)
        if kind == "paren" and val == "(":
            f = self.implication()
            self.expect(")")
            return f
        if kind == "word" and val in ("G", "F", "not"):
            arg = self.unary()
            return {"G": Always, "F": Eventually, "not": Not}[val](arg)
        raise LtlSyntaxError(f"unexpected {val or 'end of input'!r}", pos)


def parse_ltl(text: str) -> Formula:
    return _Parser(text).parse()


def parse_property(text: str, rule: str = "", location: str = "") -> LtlProperty:
    return LtlProperty(parse_ltl(text), rule, location)


def read_properties(path) -> list[LtlProperty]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(parse_property(line, location=f"{path}:{lineno}"))
            except LtlSyntaxError as exc:
                raise LtlSyntaxError(f"{path}:{lineno}: {exc}") from None
    return out


def write_properties(properties: Iterable[LtlProperty], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for prop in properties:
            fh.write(to_text(prop.formula) + "\n")


# evaluation

OP_ATOM, OP_NOT, OP_AND, OP_OR, OP_XOR, OP_IMPLIES, OP_ALWAYS, OP_EVENTUALLY = range(8)

_OPCODES = {Var: OP_ATOM, Not: OP_NOT, And: OP_AND, Or: OP_OR, Xor: OP_XOR,
            Implies: OP_IMPLIES, Always: OP_ALWAYS, Eventually: OP_EVENTUALLY}


@dataclass(frozen=True)
class Program:
    """Post-order encoding of a formula for the evaluation kernels."""

    opcodes: array
    left: array
    right: array
    atoms: array
    symbols: dict


def compile_formula(formula: Formula, symbols: dict | None = None) -> Program:
    """Flatten *formula*; *symbols* maps event labels to ints and is extended."""
    symbols = {} if symbols is None else symbols
    index = {}
    opcodes, left, right, atoms = array("i"), array("i"), array("i"), array("i")
    for f in subformulas(formula):
        if f in index:
            continue
        opcodes.append(_OPCODES[type(f)])
        if isinstance(f, Var):
            atoms.append(symbols.setdefault(f.label, len(symbols)))
            left.append(-1)
            right.append(-1)
        elif isinstance(f, UNARY):
            atoms.append(-1)
            left.append(index[f.arg])
            right.append(-1)
        else:
            atoms.append(-1)
            left.append(index[f.left])
            right.append(index[f.right])
        index[f] = len(opcodes) - 1
    return Program(opcodes, left, right, atoms, symbols)


def encode_traces(traces: Sequence[Sequence[str]], symbols: dict) -> tuple[array, array]:
    """Concatenate *traces* as symbol ids (-1 for events outside *symbols*)."""
    events = array("i")
    offsets = array("i", [0])
    get = symbols.get
    for trace in traces:
        events.extend(get(e, -1) for e in trace)
        offsets.append(len(events))
    return events, offsets


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    position: int | None = None  # 1-based earliest witness of a violation

    def __bool__(self):
        return self.holds


def check_many(formula: Formula, traces: Sequence[Sequence[str]], backend=None) -> list[CheckResult]:
    """Check *formula* on every trace with one kernel call."""
    program = compile_formula(formula)
    events, offsets = encode_traces(traces, program.symbols)
    kernel = _backend.get(backend)
    witnesses = kernel.check_batch(program.opcodes, program.left, program.right,
                                   program.atoms, events, offsets)
    return [CheckResult(True) if w == 0 else CheckResult(False, w) for w in witnesses]


def check(formula: Formula | LtlProperty, trace: Sequence[str], backend=None) -> CheckResult:
    """Whether *trace* satisfies *formula*; violations carry the earliest witness.

    The witness of a violated ``G f`` is the first position where f fails;
    for any other top-level formula it is position 1.
    """
    if isinstance(formula, LtlProperty):
        formula = formula.formula
    return check_many(formula, [trace], backend)[0]
