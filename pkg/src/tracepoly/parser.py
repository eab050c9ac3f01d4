"""Text <-> TracePoly.

Grammar (whitespace insignificant)::

    expr     := term (('+' | '-') term)*
    term     := factor ('*' factor)*
    factor   := '-' factor | atom ('^' uint)?
    atom     := rational | 'x' | 'Tr' '(' expr ')' | '(' expr ')'
    rational := int ('/' posint)? | decimal

Unary minus sits at the factor level so ``-x^2`` reads as ``-(x^2)``.
Multiplication must be explicit.  ``Tr(e)`` applies the trace map to ``e``,
so traces of pure expressions collapse (``Tr(Tr(x)) == Tr(x)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .ring import IndexRangeError, TracePoly

MAX_EXPONENT = 256
MAX_DEPTH = 100


class ParseError(ValueError):
    """Syntax error; ``offset`` is the byte offset into the UTF-8 input."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at byte {offset}")


# -- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Trace:
    arg: "Node"


@dataclass(frozen=True)
class Group:
    inner: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of '+', '-', '*'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Neg:
    operand: "Node"


Node = Union[Num, Var, Trace, Group, BinOp, Pow, Neg]


class _Fault(Exception):
    def __init__(self, message: str, pos: int):
        super().__init__(message)
        self.message = message
        self.pos = pos


# -- tokenizer ---------------------------------------------------------------


@dataclass
class _Token:
    kind: str  # 'num', 'x', 'Tr', 'op', 'end'
    text: str
    pos: int  # character index


def _tokenize(text: str) -> list[_Token]:
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
        elif ch.isascii() and ch.isdigit():
            j = i
            while j < n and text[j].isascii() and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                k = j + 1
                while k < n and text[k].isascii() and text[k].isdigit():
                    k += 1
                if k == j + 1:
                    raise _Fault("expected digits after decimal point", k)
                j = k
            toks.append(_Token("num", text[i:j], i))
            i = j
        elif ch == "x":
            toks.append(_Token("x", ch, i))
            i += 1
        elif text.startswith("Tr", i):
            toks.append(_Token("Tr", "Tr", i))
            i += 2
        elif ch in "+-*^/()":
            toks.append(_Token("op", ch, i))
            i += 1
        else:
            raise _Fault(f"unexpected character {ch!r}", i)
    toks.append(_Token("end", "", n))
    return toks


def _byte_offset(text: str, pos: int) -> int:
    # argv arrives with undecodable bytes as surrogate escapes; count them as one byte
    head = text[:pos]
    try:
        return len(head.encode("utf-8", errors="surrogateescape"))
    except UnicodeEncodeError:
        return len(head.encode("utf-8", errors="surrogatepass"))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.depth = 0

    def peek(self) -> _Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Token | None = None):
        tok = tok or self.peek()
        raise _Fault(msg, tok.pos)

    def take(self) -> _Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            found = tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        return self.take()

    def at_op(self, chars: str) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text in chars

    def parse(self) -> Node:
        node = self.expr()
        if self.peek().kind != "end":
            self.error(f"unexpected {self.peek().text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.at_op("+-"):
            op = self.take().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.at_op("*"):
            self.take()
            node = BinOp("*", node, self.factor())
        return node

    def factor(self) -> Node:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            self.error(f"nesting deeper than {MAX_DEPTH}")
        try:
            return self._factor()
        finally:
            self.depth -= 1

    def _factor(self) -> Node:
        if self.at_op("-"):
            self.take()
            return Neg(self.factor())
        node = self.atom()
        if self.at_op("^"):
            self.take()
            tok = self.peek()
            if tok.kind != "num" or "." in tok.text:
                self.error("expected a nonnegative integer exponent")
            self.take()
            e = int(tok.text)
            if e > MAX_EXPONENT:
                self.error(f"exponent {e} exceeds {MAX_EXPONENT}", tok)
            node = Pow(node, e)
        return node

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.take()
            if "." in tok.text:
                if self.at_op("/"):
                    self.error("a decimal literal cannot have a denominator")
                return Num(Fraction(tok.text))
            num = int(tok.text)
            if self.at_op("/"):
                self.take()
                den_tok = self.peek()
                if den_tok.kind != "num" or "." in den_tok.text:
                    self.error("expected an integer denominator")
                self.take()
                den = int(den_tok.text)
                if den == 0:
                    self.error("zero denominator", den_tok)
                return Num(Fraction(num, den))
            return Num(Fraction(num))
        if tok.kind == "x":
            self.take()
            return Var()
        if tok.kind == "Tr":
            self.take()
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return Trace(inner)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            inner = self.expr()
            self.expect(")")
            return Group(inner)
        self.error(f"unexpected {tok.text or 'end of input'!r}")


def parse_syntax(text: str) -> Node:
    """Parse ``text`` into a syntax tree, raising :class:`ParseError`."""
    try:
        return _Parser(text).parse()
    except _Fault as exc:
        raise ParseError(exc.message, _byte_offset(text, exc.pos), text) from None


def to_poly(node: Node) -> TracePoly:
    if isinstance(node, Num):
        return TracePoly.constant(node.value)
    if isinstance(node, Var):
        return TracePoly.x()
    if isinstance(node, Trace):
        return to_poly(node.arg).trace()
    if isinstance(node, Group):
        return to_poly(node.inner)
    if isinstance(node, Neg):
        return -to_poly(node.operand)
    if isinstance(node, Pow):
        return to_poly(node.base) ** node.exponent
    if isinstance(node, BinOp):
        # long sums and products form left-leaning chains; walk them without recursion
        chain = []
        while isinstance(node, BinOp):
            chain.append((node.op, node.right))
            node = node.left
        acc = to_poly(node)
        for op, right in reversed(chain):
            b = to_poly(right)
            acc = acc + b if op == "+" else acc - b if op == "-" else acc * b
        return acc
    raise TypeError(f"not a syntax node: {node!r}")


def parse(text: str) -> TracePoly:
    """Parse an expression such as ``"Tr(x^2)-Tr(x)^2"`` into a TracePoly."""
    node = parse_syntax(text)
    try:
        return to_poly(node)
    except IndexRangeError as exc:
        raise ParseError(str(exc), 0, text) from None


# -- formatting ----------------------------------------------------------------


def _format_monomial(mono: tuple[int, ...]) -> str:
    factors = []
    for j in range(len(mono) - 1, 0, -1):
        e = mono[j]
        if not e:
            continue
        sym = "Tr(x)" if j == 1 else f"Tr(x^{j})"
        factors.append(sym if e == 1 else f"{sym}^{e}")
    if mono and mono[0]:
        factors.append("x" if mono[0] == 1 else f"x^{mono[0]}")
    return "*".join(factors)


def format_poly(f: TracePoly) -> str:
    """Canonical text; ``parse(format_poly(f)) == f``."""
    if f.is_zero():
        return "0"
    out = []
    for mono, c in f.sorted_terms():
        body = _format_monomial(mono)
        mag = abs(c)
        if not body:
            piece = str(mag)
        elif mag == 1:
            piece = body
        else:
            piece = f"{mag}*{body}"
        if c < 0:
            out.append("-" + piece)
        else:
            out.append(("+" if out else "") + piece)
    return "".join(out)


format = format_poly  # noqa: A001  (public name used by the CLI contract)
