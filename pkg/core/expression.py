"""Per-coordinate map formulas: tokenizer, recursive-descent parser, evaluator.

Grammar (whitespace between tokens is ignored):

    expression  := comparison
    comparison  := additive [ cmp_op additive ]
    cmp_op      := "<" | "<=" | ">" | ">=" | "≤" | "≥"
    additive    := term { ("+" | "-") term }
    term        := unary { ("*" | "/") unary }
    unary       := ("-" | "+") unary | primary
    primary     := number | variable | call | "(" expression ")"
    call        := name "(" expression { "," expression } ")"
    name        := "abs" (1 arg) | "min" (>= 2) | "max" (>= 2) | "if" (3 args)
    variable    := "x" digit { digit }            x1 .. xn, 1-based
    number      := digits [ "." digits ] [ exponent ] | "." digits [ exponent ]
    exponent    := ("e" | "E") [ "+" | "-" ] digits

A comparison evaluates to 1.0 or 0.0. if(c, a, b) yields a where c != 0 and
b elsewhere; only the taken branch is checked for division by zero.

Formulas are evaluated on numpy arrays, one row per point, so a whole
sample batch goes through one call.
"""

import logging
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from core.errors import ExpressionEvalError, ExpressionSyntaxError

logger = logging.getLogger(__name__)

FUNCTION_ARITY = {
    "abs": (1, 1),
    "min": (2, None),
    "max": (2, None),
    "if": (3, 3),
}

_CMP_ALIASES = {"≤": "<=", "≥": ">="}

_TOKEN_RE = re.compile(r"""
    (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op><=|>=|≤|≥|[-+*/(),<>])
""", re.VERBOSE)

_VARIABLE_RE = re.compile(r"x([1-9]\d*)")


# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------
@dataclass
class Token:
    kind: str       # "number", "name", "op" or "end"
    text: str
    pos: int


def tokenize(source: str) -> List[Token]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if not m:
            raise ExpressionSyntaxError(f"unexpected character {source[pos]!r}", source, pos)
        kind = m.lastgroup
        text = m.group(kind)
        if kind == "op":
            text = _CMP_ALIASES.get(text, text)
        tokens.append(Token(kind, text, pos))
        pos = m.end()
    tokens.append(Token("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Syntax tree
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str
    index: int      # 0-based column


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Compare:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: Tuple["Node", ...]


Node = Union[Number, Variable, Unary, Binary, Compare, Call]


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = tokenize(source)
        self.i = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _expect(self, text: str) -> Token:
        tok = self.current
        if tok.kind != "op" or tok.text != text:
            shown = tok.text or "end of input"
            raise ExpressionSyntaxError(f"expected {text!r}, found {shown!r}", self.source, tok.pos)
        return self._advance()

    def parse(self) -> Node:
        node = self.expression()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {self.current.text!r}",
                                        self.source, self.current.pos)
        return node

    def expression(self) -> Node:
        return self.comparison()

    def comparison(self) -> Node:
        left = self.additive()
        tok = self.current
        if tok.kind == "op" and tok.text in ("<", "<=", ">", ">="):
            self._advance()
            return Compare(tok.text, left, self.additive())
        return left

    def additive(self) -> Node:
        node = self.term()
        while self.current.kind == "op" and self.current.text in ("+", "-"):
            op = self._advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.kind == "op" and self.current.text in ("*", "/"):
            op = self._advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.kind == "op" and self.current.text in ("-", "+"):
            op = self._advance().text
            operand = self.unary()
            return Unary("-", operand) if op == "-" else operand
        return self.primary()

    def primary(self) -> Node:
        tok = self.current
        if tok.kind == "number":
            self._advance()
            return Number(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self._advance()
            node = self.expression()
            self._expect(")")
            return node
        if tok.kind == "name":
            self._advance()
            if self.current.kind == "op" and self.current.text == "(":
                return self._call(tok)
            m = _VARIABLE_RE.fullmatch(tok.text)
            if not m:
                raise ExpressionEvalError(f"unknown variable {tok.text!r} in {self.source!r}")
            return Variable(tok.text, int(m.group(1)) - 1)
        shown = tok.text or "end of input"
        raise ExpressionSyntaxError(f"unexpected {shown!r}", self.source, tok.pos)

    def _call(self, name_tok: Token) -> Node:
        func = name_tok.text
        if func not in FUNCTION_ARITY:
            raise ExpressionSyntaxError(f"unknown function {func!r}", self.source, name_tok.pos)
        self._expect("(")
        args = [self.expression()]
        while self.current.kind == "op" and self.current.text == ",":
            self._advance()
            args.append(self.expression())
        self._expect(")")
        lo, hi = FUNCTION_ARITY[func]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ExpressionSyntaxError(f"{func}() takes {lo if lo == hi else f'at least {lo}'} "
                                        f"argument(s), got {len(args)}", self.source, name_tok.pos)
        return Call(func, tuple(args))


def parse(source: str) -> Node:
    return _Parser(source).parse()


def variables(node: Node) -> List[int]:
    """Sorted 0-based indices of the variables a tree refers to."""
    found = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Variable):
            found.add(n.index)
        elif isinstance(n, Unary):
            stack.append(n.operand)
        elif isinstance(n, (Binary, Compare)):
            stack.extend((n.left, n.right))
        elif isinstance(n, Call):
            stack.extend(n.args)
    return sorted(found)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------
def evaluate(node: Node, env: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Evaluate a tree on every row of env (shape (m, n)); returns shape (m,).

    mask marks the rows whose value is actually used; errors are only raised
    for those rows.
    """
    m = env.shape[0]
    if mask is None:
        mask = np.ones(m, dtype=bool)

    if isinstance(node, Number):
        return np.full(m, node.value)
    if isinstance(node, Variable):
        if node.index >= env.shape[1]:
            raise ExpressionEvalError(f"unknown variable {node.name!r} in dimension {env.shape[1]}")
        return env[:, node.index].copy()
    if isinstance(node, Unary):
        return -evaluate(node.operand, env, mask)
    if isinstance(node, Binary):
        left = evaluate(node.left, env, mask)
        right = evaluate(node.right, env, mask)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        zero = right == 0
        if np.any(zero & mask):
            raise ExpressionEvalError("division by zero")
        return np.divide(left, right, out=np.zeros(m), where=~zero)
    if isinstance(node, Compare):
        left = evaluate(node.left, env, mask)
        right = evaluate(node.right, env, mask)
        if node.op == "<":
            out = left < right
        elif node.op == "<=":
            out = left <= right
        elif node.op == ">":
            out = left > right
        else:
            out = left >= right
        return out.astype(float)
    if isinstance(node, Call):
        if node.func == "if":
            cond = evaluate(node.args[0], env, mask) != 0
            then = evaluate(node.args[1], env, mask & cond)
            other = evaluate(node.args[2], env, mask & ~cond)
            return np.where(cond, then, other)
        values = [evaluate(a, env, mask) for a in node.args]
        if node.func == "abs":
            return np.abs(values[0])
        reduce = np.minimum if node.func == "min" else np.maximum
        out = values[0]
        for v in values[1:]:
            out = reduce(out, v)
        return out
    raise ExpressionEvalError(f"cannot evaluate node {node!r}")


class Expression:
    """A compiled per-coordinate formula."""

    def __init__(self, source: str, dim: Optional[int] = None):
        self.source = source
        self.tree = parse(source)
        self.variables = variables(self.tree)
        if dim is not None and self.variables and self.variables[-1] >= dim:
            bad = self.variables[-1] + 1
            raise ExpressionEvalError(f"unknown variable 'x{bad}' in {source!r} (dimension {dim})")

    def __call__(self, env: np.ndarray, mask: Optional[np.ndarray] = None) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return evaluate(self.tree, env, mask)

    def __repr__(self):
        return f"Expression({self.source!r})"
