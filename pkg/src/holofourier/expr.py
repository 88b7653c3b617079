"""Expression language for holomorphic functions on torus x SL2 products.

Grammar (whitespace is ignored)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | base ('^' ['+' | '-'] INTEGER)?
    base    := literal | var | '(' expr ')' | 'exp' '(' expr ')'
             | 'det' INDEX | 'tr' INDEX
    literal := NUMBER | '(' ['-'] NUMBER ',' ['-'] NUMBER ')'
    var     := ('z' | 'a' | 'b' | 'c' | 'd') ['_'] INDEX

Indices are 1-based factor positions: ``z_k`` names a torus factor, ``a_k``
to ``d_k`` the entries ``(a b; c d)`` of an SL2 factor, and ``det_k``/``tr_k``
its determinant and trace.  ``^`` binds tighter than ``*`` and does not
associate, so ``z1^2^3`` is rejected.

Division and negative powers are accepted only when the divisor is built
from ``z_k``, ``det_k`` and nonzero literals by negation, products, quotients
and integer powers; such expressions never vanish on the group.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ExprSyntaxError, HolomorphyError, NonFiniteError, UnknownVariableError
from .groups import FactorKind, GroupElement, GroupSpec


# AST --------------------------------------------------------------------------

@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Literal(Node):
    value: complex
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Var(Node):
    name: str  # one of z, a, b, c, d
    index: int  # 1-based factor position
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Det(Node):
    index: int
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Tr(Node):
    index: int
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Neg(Node):
    arg: Node
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int
    pos: int = field(default=-1, compare=False)


@dataclass(frozen=True)
class Exp(Node):
    arg: Node
    pos: int = field(default=-1, compare=False)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def to_source(node: Node) -> str:
    """Fully parenthesized source text; ``parse(to_source(ast)) == ast``."""
    if isinstance(node, Literal):
        v = complex(node.value)
        if v.imag == 0 and np.copysign(1.0, v.real) > 0:
            return _fmt_float(v.real)
        return f"({_fmt_float(v.real)},{_fmt_float(v.imag)})"
    if isinstance(node, Var):
        return f"{node.name}{node.index}"
    if isinstance(node, Det):
        return f"det{node.index}"
    if isinstance(node, Tr):
        return f"tr{node.index}"
    if isinstance(node, Neg):
        return f"(-{to_source(node.arg)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)}{node.op}{to_source(node.right)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)})^{node.exponent}"
    if isinstance(node, Exp):
        return f"exp({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


# tokenizer ----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z]+(?:_?\d+)?)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(src: str) -> list:
    out = []
    i = 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[i]!r}", i)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), i))
        i = m.end()
    out.append(Token("end", "", len(src)))
    return out


_IDENT = re.compile(r"([A-Za-z]+)_?(\d+)?$")


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            found = "end of input" if self.tok.kind == "end" else repr(self.tok.text)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", self.tok.pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.text in ("+", "-"):
            op = self.advance()
            node = BinOp(op.text, node, self.term(), op.pos)
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.text in ("*", "/"):
            op = self.advance()
            node = BinOp(op.text, node, self.factor(), op.pos)
        return node

    def factor(self) -> Node:
        if self.tok.text == "-":
            op = self.advance()
            return Neg(self.factor(), op.pos)
        node = self.base()
        if self.tok.text == "^":
            caret = self.advance()
            sign = 1
            if self.tok.text in ("+", "-"):
                sign = -1 if self.advance().text == "-" else 1
            t = self.tok
            if t.kind != "num" or not t.text.isdigit():
                raise ExprSyntaxError("exponent must be an integer", t.pos)
            self.advance()
            node = Pow(node, sign * int(t.text), caret.pos)
            if self.tok.text == "^":
                raise ExprSyntaxError("'^' does not associate; add parentheses", self.tok.pos)
        return node

    def _complex_literal_ahead(self) -> bool:
        j = self.i + 1
        if self.toks[j].text == "-":
            j += 1
        return self.toks[j].kind == "num" and self.toks[j + 1].text == ","

    def _signed_number(self) -> float:
        sign = 1.0
        if self.tok.text == "-":
            self.advance()
            sign = -1.0
        t = self.tok
        if t.kind != "num":
            raise ExprSyntaxError("expected a number", t.pos)
        self.advance()
        return sign * float(t.text)

    def base(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Literal(complex(float(t.text)), t.pos)
        if t.text == "(":
            if self._complex_literal_ahead():
                self.advance()
                re_part = self._signed_number()
                self.expect(",")
                im_part = self._signed_number()
                self.expect(")")
                return Literal(complex(re_part, im_part), t.pos)
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if t.kind == "ident":
            self.advance()
            m = _IDENT.match(t.text)
            name, idx = m.group(1), m.group(2)
            if name == "exp" and idx is None:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Exp(arg, t.pos)
            if name in ("det", "tr"):
                if idx is None:
                    nt = self.tok
                    if nt.kind != "num" or not nt.text.isdigit():
                        raise ExprSyntaxError(f"'{name}' needs a factor index", nt.pos)
                    self.advance()
                    idx = nt.text
                return (Det if name == "det" else Tr)(int(idx), t.pos)
            if name in ("z", "a", "b", "c", "d") and idx is not None:
                return Var(name, int(idx), t.pos)
            raise UnknownVariableError(f"unknown name {t.text!r}", t.pos)
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ExprSyntaxError(f"unexpected {found}", t.pos)


# validation -------------------------------------------------------------------------

def _nonvanishing(node: Node) -> bool:
    if isinstance(node, (Var,)):
        return node.name == "z"
    if isinstance(node, Det):
        return True
    if isinstance(node, Literal):
        return node.value != 0
    if isinstance(node, Neg):
        return _nonvanishing(node.arg)
    if isinstance(node, BinOp) and node.op in ("*", "/"):
        return _nonvanishing(node.left) and _nonvanishing(node.right)
    if isinstance(node, Pow):
        return _nonvanishing(node.base)
    return False


def _children(node: Node):
    if isinstance(node, (Neg, Exp)):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base,)
    return ()


def validate(node: Node, spec: GroupSpec) -> Node:
    """Check variable indices against ``spec`` and the division rule."""
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, (Var, Det, Tr)):
            if not 1 <= n.index <= spec.n_factors:
                raise UnknownVariableError(
                    f"factor index {n.index} out of range 1..{spec.n_factors}", n.pos)
            kind = spec.factors[n.index - 1]
            wants = FactorKind.TORUS if isinstance(n, Var) and n.name == "z" else FactorKind.SL2
            if kind is not wants:
                label = to_source(n)
                raise UnknownVariableError(f"{label!r} does not name a {wants.value} factor", n.pos)
        if isinstance(n, BinOp) and n.op == "/" and not _nonvanishing(n.right):
            raise HolomorphyError(
                f"divisor {to_source(n.right)!r} may vanish on the group", n.pos)
        if isinstance(n, Pow) and n.exponent < 0 and not _nonvanishing(n.base):
            raise HolomorphyError(
                f"negative power of {to_source(n.base)!r}, which may vanish on the group", n.pos)
        stack.extend(_children(n))
    return node


def parse(src: str, spec: GroupSpec | None = None) -> Node:
    """Parse ``src``; with ``spec`` also validate it for that group."""
    node = _Parser(src).parse()
    return node if spec is None else validate(node, spec)


# evaluation --------------------------------------------------------------------------

_ENTRY = {"a": (0, 0), "b": (0, 1), "c": (1, 0), "d": (1, 1)}


def _checked(val, node):
    if not np.all(np.isfinite(val)):
        raise NonFiniteError(f"subexpression {to_source(node)!r} is not finite")
    return val


def _eval(node: Node, g: GroupElement):
    if isinstance(node, Literal):
        return np.full(g.batch_shape, complex(node.value))
    if isinstance(node, Var):
        c = g.coords[node.index - 1]
        return c if node.name == "z" else c[(...,) + _ENTRY[node.name]]
    if isinstance(node, Det):
        m = g.coords[node.index - 1]
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    if isinstance(node, Tr):
        m = g.coords[node.index - 1]
        return m[..., 0, 0] + m[..., 1, 1]
    with np.errstate(all="ignore"):
        if isinstance(node, Neg):
            return -_eval(node.arg, g)
        if isinstance(node, BinOp):
            left, right = _eval(node.left, g), _eval(node.right, g)
            if node.op == "+":
                out = left + right
            elif node.op == "-":
                out = left - right
            elif node.op == "*":
                out = left * right
            else:
                out = left / right
            return _checked(out, node)
        if isinstance(node, Pow):
            base = _eval(node.base, g)
            n = node.exponent
            out = base ** n if n >= 0 else (1.0 / base) ** (-n)
            return _checked(out, node)
        if isinstance(node, Exp):
            return _checked(np.exp(_eval(node.arg, g)), node)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node: Node, g: GroupElement):
    """Value of the expression at ``g`` (vectorized over the batch)."""
    out = np.asarray(_checked(_eval(node, g), node), dtype=complex)
    return complex(out) if out.ndim == 0 else out


class HoloFn:
    """A parsed expression bound to a group; callable on group elements."""

    def __init__(self, source_or_ast, spec: GroupSpec):
        self.spec = spec
        if isinstance(source_or_ast, str):
            self.ast = parse(source_or_ast, spec)
            self.source = source_or_ast
        else:
            self.ast = validate(source_or_ast, spec)
            self.source = to_source(source_or_ast)

    def __call__(self, g: GroupElement):
        if g.spec != self.spec:
            from .errors import SpecMismatchError
            raise SpecMismatchError(f"expression for {self.spec} evaluated on {g.spec}")
        return evaluate(self.ast, g)

    def __repr__(self):
        return f"HoloFn({self.source!r})"

    def to_json(self) -> dict:
        return {"f": self.source}


def as_holofn(f, spec: GroupSpec):
    """Strings and ASTs become :class:`HoloFn`; callables pass through."""
    if isinstance(f, (str, Node)):
        return HoloFn(f, spec)
    if callable(f):
        return f
    raise ExprSyntaxError(f"cannot interpret {f!r} as a function")
