"""A small arithmetic expression language for charts and fields.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ('+'|'-') factor | base ('^' factor)?
    base   := number | ident | func '(' expr ')' | '(' expr ')'

Expressions evaluate on anything that supports arithmetic (floats, numpy
arrays, Taylor jets, eps-series) and differentiate symbolically.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import taylor as tm

VARIABLES = frozenset({"s1", "s2", "s", "theta", "sigma", "tau", "x", "y", "z", "xi"})
CONSTANTS = {"pi": math.pi, "e": math.e}
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


class ExprError(ValueError):
    def __init__(self, message, offset=None):
        super().__init__(message if offset is None else f"{message} (at byte {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


def _tokenize(text):
    pos = 0
    out = []
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            bad = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprError(f"unexpected character {text[bad]!r}", len(text[:bad].encode()))
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), len(text[:start].encode())))
        pos = m.end()
    out.append(("end", "", len(text.encode())))
    return out


class _Parser:
    def __init__(self, text, variables):
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, value):
        kind, val, off = self.take()
        if val != value:
            raise ExprError(f"expected {value!r}, found {val or 'end of input'!r}", off)

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        kind, val, off = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            arg = self.factor()
            return arg if val == "+" else Neg(arg)
        node = self.base()
        if self.peek()[1] == "^":
            self.take()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        kind, val, off = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if self.peek()[1] == "(":
                raise ExprError(f"unknown function {val!r}", off)
            if val in CONSTANTS:
                return Var(val)
            if val in self.variables:
                return Var(val)
            raise ExprError(f"unknown variable {val!r}", off)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprError(f"unexpected {val or 'end of input'!r}", off)


def parse_expr(text, variables=VARIABLES):
    """Parse ``text``; identifiers must be known functions, constants or ``variables``."""
    if not isinstance(text, str):
        raise ExprError(f"expression must be a string, got {type(text).__name__}")
    p = _Parser(text, frozenset(variables))
    node = p.expr()
    kind, val, off = p.peek()
    if kind != "end":
        raise ExprError(f"unexpected {val!r}", off)
    return node


def free_variables(node):
    if isinstance(node, Var):
        return set() if node.name in CONSTANTS else {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_variables(node.arg)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return free_variables(node.left) | free_variables(node.right)


# -- printing ---------------------------------------------------------------
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_string(node):
    return _show(node)[0]


def _show(node):
    if isinstance(node, Num):
        if node.value < 0:
            return "-" + _fmt_num(-node.value), _PREC["neg"]
        return _fmt_num(node.value), 5
    if isinstance(node, Var):
        return node.name, 5
    if isinstance(node, Call):
        return f"{node.func}({_show(node.arg)[0]})", 5
    if isinstance(node, Neg):
        s, p = _show(node.arg)
        if p <= _PREC["neg"]:
            s = f"({s})"
        return "-" + s, _PREC["neg"]
    prec = _PREC[node.op]
    ls, lp = _show(node.left)
    rs, rp = _show(node.right)
    if node.op == "^":
        # right associative; the exponent may be a signed factor
        if lp <= prec:
            ls = f"({ls})"
        if rp < prec and rp != _PREC["neg"]:
            rs = f"({rs})"
    else:
        if lp < prec:
            ls = f"({ls})"
        if rp <= prec:
            rs = f"({rs})"
    return f"{ls}{node.op}{rs}", prec


# -- evaluation -------------------------------------------------------------
_FUNCS = {"sin": tm.sin, "cos": tm.cos, "tan": tm.tan, "exp": tm.exp, "log": tm.log, "sqrt": tm.sqrt}


def evaluate(node, env):
    """Evaluate on any arithmetic type; ``env`` maps variable names to values."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if node.name in env:
            return env[node.name]
        if node.name in CONSTANTS:
            return CONSTANTS[node.name]
        raise ExprError(f"variable {node.name!r} has no value")
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Call):
        return _FUNCS[node.func](evaluate(node.arg, env))
    a = evaluate(node.left, env)
    if node.op == "^" and isinstance(node.right, Num):
        p = node.right.value
        if p == int(p) and abs(p) <= 16:
            return _ipow(a, int(p))
        return _pow(a, p)
    b = evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return _pow(a, b)


def _ipow(a, n):
    if isinstance(a, (int, float, np.floating, np.ndarray)):
        return np.asarray(a, float) ** n if isinstance(a, np.ndarray) else float(a) ** n
    if n < 0:
        return 1.0 / _ipow(a, -n)
    if n == 0:
        return a * 0.0 + 1.0
    out = a
    for _ in range(n - 1):
        out = out * a
    return out


def _pow(a, b):
    if isinstance(a, (int, float, np.floating, np.ndarray)) and isinstance(b, (int, float, np.floating, np.ndarray)):
        return np.power(np.asarray(a, float), b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else float(a) ** b
    if isinstance(b, (int, float, np.floating)):
        return a ** float(b)
    return tm.exp(b * tm.log(a))


# -- symbolic differentiation ----------------------------------------------
def _num(v):
    return Num(float(v))


def _is(node, v):
    return isinstance(node, Num) and node.value == v


def _add(a, b):
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    return BinOp("+", a, b)


def _sub(a, b):
    if _is(b, 0):
        return a
    if _is(a, 0):
        return _neg(b)
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    return BinOp("-", a, b)


def _neg(a):
    if isinstance(a, Num):
        return _num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _mul(a, b):
    if _is(a, 0) or _is(b, 0):
        return _num(0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    return BinOp("*", a, b)


def _div(a, b):
    if _is(a, 0):
        return _num(0)
    if _is(b, 1):
        return a
    return BinOp("/", a, b)


def _powe(a, b):
    if _is(b, 1):
        return a
    if _is(b, 0):
        return _num(1)
    return BinOp("^", a, b)


def diff(node, var):
    """Exact derivative tree of ``node`` with respect to variable ``var``."""
    if isinstance(node, Num):
        return _num(0)
    if isinstance(node, Var):
        return _num(1 if node.name == var else 0)
    if isinstance(node, Neg):
        return _neg(diff(node.arg, var))
    if isinstance(node, Call):
        u = node.arg
        du = diff(u, var)
        if _is(du, 0):
            return _num(0)
        f = node.func
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = _neg(Call("sin", u))
        elif f == "tan":
            outer = _add(_num(1), _powe(Call("tan", u), _num(2)))
        elif f == "exp":
            outer = Call("exp", u)
        elif f == "log":
            return _div(du, u)
        else:  # sqrt
            return _div(du, _mul(_num(2), Call("sqrt", u)))
        return _mul(outer, du)
    a, b = node.left, node.right
    da, db = diff(a, var), diff(b, var)
    if node.op == "+":
        return _add(da, db)
    if node.op == "-":
        return _sub(da, db)
    if node.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if node.op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), _powe(b, _num(2)))
    # power
    if _is(db, 0):
        if isinstance(b, Num):
            return _mul(_mul(b, _powe(a, _num(b.value - 1))), da)
        return _mul(_mul(b, _powe(a, _sub(b, _num(1)))), da)
    # general a^b = exp(b log a)
    return _mul(node, _add(_mul(db, Call("log", a)), _div(_mul(b, da), a)))


def substitute(node, mapping):
    """Replace variables by subtrees."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, mapping))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, mapping))
    return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping))


class Expr:
    """A parsed expression bundled with its source text."""

    def __init__(self, source, variables=VARIABLES):
        if isinstance(source, (int, float)):
            source = repr(float(source))
        self.text = source
        self.ast = parse_expr(source, variables)

    def __call__(self, **env):
        return evaluate(self.ast, env)

    def __repr__(self):
        return f"Expr({self.text!r})"
