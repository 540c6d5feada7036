"""Small expression language for user-supplied scalar fields (H, u, ...).

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``**`` is accepted as a synonym for ``^``.  The parsed tree keeps grouping
parentheses and the literal spelling of numbers, so ``str(parse(s))`` equals
``s`` with whitespace removed.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import jets

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("theta", "phi", "x", "y", "z1", "t1", "z2", "t2", "z", "t", "zeta")
ALIASES = {"θ": "theta", "φ": "phi", "ϕ": "phi", "ζ": "zeta"}


class FieldSyntaxError(ValueError):
    def __init__(self, message: str, source: str, pos: int):
        line = source.count("\n", 0, pos) + 1
        col = pos - (source.rfind("\n", 0, pos) + 1) + 1
        self.line, self.column = line, col
        super().__init__(f"{message} at line {line}, column {col}")


class UnknownIdentifierError(FieldSyntaxError):
    pass


class PhiDependenceError(ValueError):
    """The field was declared independent of phi but mentions it."""


# -- AST -------------------------------------------------------------------

class Node:
    pos: int

    def evaluate(self, env: Mapping):
        raise NotImplementedError

    def children(self) -> tuple["Node", ...]:
        return ()

    def names(self) -> set[str]:
        out: set[str] = set()
        for c in self.children():
            out |= c.names()
        return out

    @property
    def is_constant(self) -> bool:
        return not self.names()

    def fold(self) -> "Node":
        """Collapse constant subtrees into numbers."""
        if self.is_constant:
            return Num(repr(float(self.evaluate({}))), self.pos)
        return self._fold_children()

    def _fold_children(self) -> "Node":
        return self


@dataclass
class Num(Node):
    text: str
    pos: int = 0

    @property
    def value(self) -> float:
        return float(self.text)

    def evaluate(self, env):
        return self.value

    def __str__(self):
        return self.text


@dataclass
class Name(Node):
    text: str
    pos: int = 0

    @property
    def canonical(self) -> str:
        return ALIASES.get(self.text, self.text)

    def names(self):
        return set() if self.canonical in CONSTANTS else {self.canonical}

    def evaluate(self, env):
        key = self.canonical
        if key in CONSTANTS:
            return CONSTANTS[key]
        try:
            return env[key]
        except KeyError:
            raise KeyError(f"no value bound for variable '{key}'") from None

    def __str__(self):
        return self.text


@dataclass
class Group(Node):
    inner: Node
    pos: int = 0

    def children(self):
        return (self.inner,)

    def evaluate(self, env):
        return self.inner.evaluate(env)

    def _fold_children(self):
        return Group(self.inner.fold(), self.pos)

    def __str__(self):
        return f"({self.inner})"


@dataclass
class Unary(Node):
    op: str
    operand: Node
    pos: int = 0

    def children(self):
        return (self.operand,)

    def evaluate(self, env):
        v = self.operand.evaluate(env)
        return -v if self.op == "-" else v

    def _fold_children(self):
        return Unary(self.op, self.operand.fold(), self.pos)

    def __str__(self):
        return f"{self.op}{self.operand}"


@dataclass
class Binary(Node):
    op: str
    left: Node
    right: Node
    pos: int = 0
    spelling: str = ""

    def children(self):
        return (self.left, self.right)

    def evaluate(self, env):
        a, b = self.left.evaluate(env), self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            if isinstance(b, jets.Jet):
                return a * jets.reciprocal(b, str(self.right))
            if np.any(np.asarray(b) == 0):
                raise jets.JetDomainError("division by zero", str(self))
            return a / b
        # power: integer exponents stay exact, others go through the jet binomial series
        if not isinstance(b, jets.Jet) and np.ndim(b) == 0:
            return jets.power(a, float(b), str(self))
        return jets.exp(b * jets.log(a, str(self.left)))

    def _fold_children(self):
        return Binary(self.op, self.left.fold(), self.right.fold(), self.pos, self.spelling)

    def __str__(self):
        return f"{self.left}{self.spelling or self.op}{self.right}"


@dataclass
class Call(Node):
    func: str
    arg: Node
    pos: int = 0

    def children(self):
        return (self.arg,)

    def evaluate(self, env):
        return getattr(jets, self.func)(self.arg.evaluate(env), str(self))

    def _fold_children(self):
        return Call(self.func, self.arg.fold(), self.pos)

    def __str__(self):
        return f"{self.func}({self.arg})"


# -- parser ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_θφϕζ][A-Za-z_0-9]*)|(?P<op>\*\*|[-+*/^()]))")


@dataclass
class FieldExpr:
    """A parsed scalar field."""

    source: str
    tree: Node
    variables: frozenset[str] = field(default_factory=frozenset)

    def evaluate(self, env: Mapping):
        return self.tree.evaluate(env)

    __call__ = evaluate

    def __str__(self) -> str:
        return str(self.tree)

    @property
    def is_constant(self) -> bool:
        return not self.variables

    def folded(self) -> Node:
        return self.tree.fold()

    def constant_factor(self) -> float | None:
        """Numeric coefficient of a ``c*expr`` / ``expr*c`` product (folded), if any."""
        node = self.tree
        while isinstance(node, Group):
            node = node.inner
        if node.is_constant:
            return float(node.evaluate({}))
        if isinstance(node, Binary) and node.op == "*":
            for side in (node.left, node.right):
                if side.is_constant:
                    return float(side.evaluate({}))
        return None


_PHI_TOKEN = re.compile(r"(?<![A-Za-z0-9_])(phi|φ|ϕ)(?![A-Za-z0-9_])")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(src):
            if src[pos:].strip() == "":
                break
            m = _TOKEN.match(src, pos)
            if not m or m.end() == pos:
                start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
                raise FieldSyntaxError(f"unexpected character {src[start]!r}", src, start)
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("end", "", len(self.src))

    def take(self, text: str | None = None):
        tok = self.peek()
        if text is not None and tok[1] != text:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise FieldSyntaxError(f"expected {text!r}, found {what}", self.src, tok[2])
        self.i += 1
        return tok

    def parse(self) -> Node:
        if not self.toks:
            raise FieldSyntaxError("empty expression", self.src, 0)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise FieldSyntaxError(f"unexpected {tok[1]!r}", self.src, tok[2])
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, pos = self.take()
            node = Binary(op, node, self.term(), pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            node = Binary(op, node, self.unary(), pos)
        return node

    def unary(self) -> Node:
        if self.peek()[1] in ("-", "+"):
            _, op, pos = self.take()
            return Unary(op, self.unary(), pos)
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.peek()[1] in ("^", "**"):
            _, op, pos = self.take()
            node = Binary("^", node, self.unary(), pos, spelling=op)
        return node

    def atom(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "num":
            self.take()
            return Num(text, pos)
        if kind == "name":
            self.take()
            canon = ALIASES.get(text, text)
            if self.peek()[1] == "(":
                if canon not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {text!r}", self.src, pos)
                self.take("(")
                arg = self.expr()
                self.take(")")
                return Call(canon, arg, pos)
            if canon in FUNCTIONS:
                raise FieldSyntaxError(f"function {text!r} needs an argument", self.src, pos)
            if canon not in CONSTANTS and canon not in VARIABLES:
                raise UnknownIdentifierError(f"unknown identifier {text!r}", self.src, pos)
            return Name(text, pos)
        if text == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return Group(inner, pos)
        what = "end of input" if kind == "end" else repr(text)
        raise FieldSyntaxError(f"unexpected {what}", self.src, pos)


def parse_field(src: str, allowed: Iterable[str] | None = None, forbid_phi: bool = False) -> FieldExpr:
    """Parse ``src`` into a :class:`FieldExpr`.

    ``allowed`` restricts the variables to a chart's declared names;
    ``forbid_phi`` rejects any dependence on the angle ``phi`` (the H slot).
    """
    if forbid_phi and _PHI_TOKEN.search(src):
        # reported ahead of any syntax problem: "H(phi)" is a phi-dependence error
        raise PhiDependenceError(f"field {src!r} depends on phi; H must be independent of phi")
    tree = _Parser(src).parse()
    names = tree.names()
    if forbid_phi and "phi" in names:
        raise PhiDependenceError(f"field {src!r} depends on phi; H must be independent of phi")
    if allowed is not None:
        allowed = set(allowed)
        extra = sorted(names - allowed)
        if extra:
            raise UnknownIdentifierError(
                f"variable(s) {', '.join(extra)} not available on this chart "
                f"(allowed: {', '.join(sorted(allowed))})", src, max(_first_pos(tree, extra[0]), 0))
    return FieldExpr(src, tree, frozenset(names))


def _first_pos(node: Node, name: str) -> int:
    if isinstance(node, Name) and node.canonical == name:
        return node.pos
    for c in node.children():
        p = _first_pos(c, name)
        if p >= 0:
            return p
    return -1
