"""Symbolic smooth functions on R^n.

Expressions are immutable trees.  They can be parsed from text, printed back,
differentiated formally, and evaluated either on real points or on near
points with coordinates in a Weil algebra, which computes the prolongation
f^A.  On dual numbers this is ordinary forward-mode differentiation; on
R[T]/(T^{h+1}) it is Taylor mode of order h.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .algebra import INVERT_TOL, WeilAlgebra, WeilElement
from .errors import (
    AlgebraMismatch,
    DomainError,
    SamplingExhausted,
    SpecSyntaxError,
    UnknownIdentifier,
    VariableOutOfRange,
)

PRIMITIVES = ("exp", "log", "sin", "cos", "sqrt")
Number = Union[int, float]


class Expr:
    """Base class of expression nodes; arithmetic operators build folded trees."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k):
        return power(self, k)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: float


@dataclass(frozen=True, slots=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True, slots=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, slots=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, slots=True)
class Call(Expr):
    func: str
    arg: Expr


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)):
        return Const(float(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def var(i: int) -> Var:
    return Var(i)


def const(c: float) -> Const:
    return Const(float(c))


def _is_const(e, value=None):
    return e.__class__ is Const and (value is None or e.value == value)


# -- folding constructors ---------------------------------------------------

def add(a: Expr, b: Expr) -> Expr:
    ca, cb = a.__class__ is Const, b.__class__ is Const
    if ca and cb:
        return Const(a.value + b.value)
    if ca and a.value == 0.0:
        return b
    if cb and b.value == 0.0:
        return a
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = a.__class__ is Const, b.__class__ is Const
    if ca and cb:
        return Const(a.value * b.value)
    if ca:
        v = a.value
        if v == 0.0:
            return ZERO
        if v == 1.0:
            return b
        if v == -1.0:
            return neg(b)
    if cb:
        v = b.value
        if v == 0.0:
            return ZERO
        if v == 1.0:
            return a
        if v == -1.0:
            return neg(a)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, k: int) -> Expr:
    if int(k) != k:
        raise TypeError("exponents must be integers; write x^r as exp(r*log(x))")
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const) and (a.value != 0.0 or k > 0):
        return Const(a.value ** k)
    return Pow(a, k)


def call(func: str, a: Expr) -> Expr:
    if func not in PRIMITIVES:
        raise ValueError(f"unknown primitive {func!r}")
    return Call(func, a)


def exp(a):
    return Call("exp", as_expr(a))


def log(a):
    return Call("log", as_expr(a))


def sin(a):
    return Call("sin", as_expr(a))


def cos(a):
    return Call("cos", as_expr(a))


def sqrt(a):
    return Call("sqrt", as_expr(a))


# -- traversal helpers ------------------------------------------------------

def variables(e: Expr) -> set[int]:
    out: set[int] = set()
    stack = [e]
    seen = set()
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, (Add, Sub, Mul, Div)):
            stack.extend((node.left, node.right))
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, (Neg, Call)):
            stack.append(node.arg)
    return out


def size(e: Expr) -> int:
    """Number of nodes, counting shared subtrees once per occurrence."""
    if isinstance(e, (Add, Sub, Mul, Div)):
        return 1 + size(e.left) + size(e.right)
    if isinstance(e, Pow):
        return 1 + size(e.base)
    if isinstance(e, (Neg, Call)):
        return 1 + size(e.arg)
    return 1


# -- printing ---------------------------------------------------------------

def _fmt_number(c: float) -> str:
    if not math.isfinite(c):
        raise ValueError(f"cannot print non-finite constant {c}")
    if c == int(c) and abs(c) < 1e15 and not (c == 0.0 and math.copysign(1.0, c) < 0):
        return str(int(c))
    return repr(c)


def _prec(e: Expr) -> int:
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    return 5


def _wrap(e: Expr, min_prec: int, right: bool = False) -> str:
    text = to_string(e)
    p = _prec(e)
    if p < min_prec or (right and p == 3):
        return f"({text})"
    return text


def to_string(e: Expr) -> str:
    """Print ``e`` so that :func:`parse` rebuilds exactly the same tree."""
    if isinstance(e, Const):
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Add):
        return f"{_wrap(e.left, 1)} + {_wrap(e.right, 2, True)}"
    if isinstance(e, Sub):
        return f"{_wrap(e.left, 1)} - {_wrap(e.right, 2, True)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, 2)}*{_wrap(e.right, 3, True)}"
    if isinstance(e, Div):
        return f"{_wrap(e.left, 2)}/{_wrap(e.right, 3, True)}"
    if isinstance(e, Neg):
        if isinstance(e.arg, Const) and _prec(e.arg) == 5:
            return f"-({to_string(e.arg)})"
        return f"-{_wrap(e.arg, 3)}"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 5)}^{e.exponent}"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


# -- parsing ----------------------------------------------------------------

_TOKENS = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[-+*/^()])"
)


def _tokenize(source: str):
    pos = 0
    out = []
    while pos < len(source):
        ch = source[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _TOKENS.match(source, pos)
        if not m:
            raise SpecSyntaxError(f"unexpected character {ch!r}", pos)
        out.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(("end", "", len(source)))
    return out


class _Parser:
    def __init__(self, source: str, n: int):
        self.toks = _tokenize(source)
        self.pos = 0
        self.n = n

    def peek(self, offset=0):
        return self.toks[min(self.pos + offset, len(self.toks) - 1)]

    def take(self):
        tk = self.toks[self.pos]
        self.pos += 1
        return tk

    def expect(self, text):
        tk = self.take()
        if tk[1] != text:
            raise SpecSyntaxError(f"expected {text!r}, found {tk[1] or 'end of input'!r}", tk[2])
        return tk

    def parse(self) -> Expr:
        e = self.expr()
        tk = self.peek()
        if tk[0] != "end":
            raise SpecSyntaxError(f"unexpected {tk[1]!r}", tk[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            # a bare literal after '-' is a negative constant unless it is raised to a power
            if self.peek()[0] == "num" and self.peek(1)[1] != "^":
                return Const(-float(self.take()[1]))
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] != "^":
            return base
        exps = []
        while self.peek()[1] == "^":
            self.take()
            exps.append(self.integer())
        k = exps[-1]
        for e in reversed(exps[:-1]):
            k = e ** k
            if int(k) != k:
                raise SpecSyntaxError("exponent tower is not an integer", self.peek()[2])
        return Pow(base, int(k))

    def integer(self) -> int:
        sign = 1
        if self.peek()[1] == "-":
            self.take()
            sign = -1
        tk = self.take()
        if tk[0] != "num" or not tk[1].isdigit():
            raise SpecSyntaxError("exponent must be an integer literal", tk[2])
        return sign * int(tk[1])

    def atom(self) -> Expr:
        tk = self.take()
        kind, text, pos = tk
        if kind == "num":
            return Const(float(text))
        if kind == "ident":
            if text in PRIMITIVES:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            m = re.fullmatch(r"x(\d+)", text)
            if not m:
                raise UnknownIdentifier(f"unknown identifier {text!r}", pos)
            i = int(m.group(1))
            if not 1 <= i <= self.n:
                raise VariableOutOfRange(f"{text} exceeds the ambient dimension {self.n}", pos)
            return Var(i)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise SpecSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def parse(source: str, n: int) -> Expr:
    """Parse ``source`` as a function of x1..xn.

    Precedence is ``^`` > unary minus > ``* /`` > ``+ -``; binary operators
    associate left, ``^`` takes integer literals and associates right.
    """
    return _Parser(source, n).parse()


# -- differentiation --------------------------------------------------------

# Derivatives are cached per (node, variable).  Entries hold the node itself,
# so its id cannot be reused while the entry lives; the cache is dropped
# wholesale once it grows past the cap.
_PARTIAL_CACHE: dict[tuple[int, int], tuple[Expr, Expr]] = {}
_PARTIAL_CACHE_CAP = 400_000


def clear_derivative_cache() -> None:
    _PARTIAL_CACHE.clear()


def partial(f: Expr, i: int) -> Expr:
    """Formal derivative with respect to x_i."""
    if len(_PARTIAL_CACHE) > _PARTIAL_CACHE_CAP:
        _PARTIAL_CACHE.clear()
    cache = _PARTIAL_CACHE

    def d(e: Expr) -> Expr:
        key = (id(e), i)
        hit = cache.get(key)
        if hit is not None and hit[0] is e:
            return hit[1]
        if isinstance(e, Const):
            return ZERO
        if isinstance(e, Var):
            return ONE if e.index == i else ZERO
        if isinstance(e, Add):
            out = add(d(e.left), d(e.right))
        elif isinstance(e, Sub):
            out = sub(d(e.left), d(e.right))
        elif isinstance(e, Neg):
            out = neg(d(e.arg))
        elif isinstance(e, Mul):
            out = add(mul(d(e.left), e.right), mul(e.left, d(e.right)))
        elif isinstance(e, Div):
            num = sub(mul(d(e.left), e.right), mul(e.left, d(e.right)))
            out = ZERO if _is_const(num, 0.0) else div(num, power(e.right, 2))
        elif isinstance(e, Pow):
            db = d(e.base)
            out = ZERO if _is_const(db, 0.0) else mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), db)
        elif isinstance(e, Call):
            da = d(e.arg)
            if _is_const(da, 0.0):
                out = ZERO
            elif e.func == "exp":
                out = mul(e, da)
            elif e.func == "log":
                out = div(da, e.arg)
            elif e.func == "sin":
                out = mul(Call("cos", e.arg), da)
            elif e.func == "cos":
                out = neg(mul(Call("sin", e.arg), da))
            elif e.func == "sqrt":
                out = div(da, mul(Const(2.0), e))
            else:
                raise ValueError(f"unknown primitive {e.func!r}")
        else:
            raise TypeError(f"not an expression node: {e!r}")
        cache[key] = (e, out)
        return out

    return d(f)


def gradient(f: Expr, n: int) -> list[Expr]:
    return [partial(f, i) for i in range(1, n + 1)]


# -- real evaluation --------------------------------------------------------

def _real_call(func: str, x: float) -> float:
    if func == "exp":
        try:
            return math.exp(x)
        except OverflowError:
            raise DomainError(f"exp({x}) overflows") from None
    if func == "log":
        if x <= 0:
            raise DomainError(f"log({x}) is undefined")
        return math.log(x)
    if func == "sqrt":
        if x < 0:
            raise DomainError(f"sqrt({x}) is undefined")
        return math.sqrt(x)
    if func == "sin":
        return math.sin(x)
    if func == "cos":
        return math.cos(x)
    raise ValueError(f"unknown primitive {func!r}")


def eval_real(f: Expr, x: Sequence[float]) -> float:
    """Evaluate ``f`` at the real point ``x`` (x[0] is x1)."""
    x = [float(v) for v in x]
    memo: dict[int, float] = {}

    def ev(e: Expr) -> float:
        key = id(e)
        if key in memo:
            return memo[key]
        if isinstance(e, Const):
            out = e.value
        elif isinstance(e, Var):
            if e.index > len(x):
                raise VariableOutOfRange(f"x{e.index} needs a point of dimension >= {e.index}", 0)
            out = x[e.index - 1]
        elif isinstance(e, Add):
            out = ev(e.left) + ev(e.right)
        elif isinstance(e, Sub):
            out = ev(e.left) - ev(e.right)
        elif isinstance(e, Mul):
            out = ev(e.left) * ev(e.right)
        elif isinstance(e, Div):
            den = ev(e.right)
            if den == 0.0:
                raise DomainError("division by zero")
            out = ev(e.left) / den
        elif isinstance(e, Neg):
            out = -ev(e.arg)
        elif isinstance(e, Pow):
            b = ev(e.base)
            if b == 0.0 and e.exponent < 0:
                raise DomainError("zero raised to a negative power")
            out = b ** e.exponent
        elif isinstance(e, Call):
            out = _real_call(e.func, ev(e.arg))
        else:
            raise TypeError(f"not an expression node: {e!r}")
        memo[key] = out
        return out

    return ev(f)


def lambdify(f: Expr) -> Callable[[Sequence[float]], float]:
    return lambda x: eval_real(f, x)


# -- near points and Weil evaluation ----------------------------------------

class NearPoint:
    """A point of (R^n)^A = A^n, i.e. n coordinates in a Weil algebra.

    ``values`` has shape ``(..., n, r)``; leading axes index a batch of points.
    The real parts of the coordinates form the origin (base point).
    """

    __slots__ = ("algebra", "values")

    def __init__(self, algebra: WeilAlgebra, values):
        values = np.asarray(values, dtype=float)
        if values.ndim < 2 or values.shape[-1] != algebra.dim:
            raise ValueError(f"near point values need shape (..., n, {algebra.dim}), got {values.shape}")
        self.algebra = algebra
        self.values = values

    @classmethod
    def from_elements(cls, coords: Sequence[WeilElement]) -> NearPoint:
        alg = coords[0].algebra
        for c in coords:
            if c.algebra != alg:
                raise AlgebraMismatch("near point coordinates live in different algebras")
        arrays = np.broadcast_arrays(*[c.coeffs for c in coords])
        return cls(alg, np.stack(arrays, axis=-2))

    @classmethod
    def at(cls, algebra: WeilAlgebra, base: Sequence[float], nilpotent=None) -> NearPoint:
        """Near point with given origin and (optionally) nilpotent parts of shape (n, r)."""
        base = np.asarray(base, dtype=float)
        values = np.zeros(base.shape + (algebra.dim,))
        if nilpotent is not None:
            values[...] = nilpotent
        values[..., 0] = base
        return cls(algebra, values)

    @classmethod
    def random(cls, algebra: WeilAlgebra, n: int, rng: np.random.Generator, size=()) -> NearPoint:
        size = (size,) if isinstance(size, int) else tuple(size)
        return cls(algebra, rng.uniform(-1.0, 1.0, size=size + (n, algebra.dim)))

    @property
    def n(self) -> int:
        return self.values.shape[-2]

    @property
    def batch_shape(self):
        return self.values.shape[:-2]

    @property
    def base(self) -> np.ndarray:
        return self.values[..., 0]

    def coord(self, i: int) -> WeilElement:
        """Coordinate x_i (1-based) as a Weil element."""
        return WeilElement(self.algebra, self.values[..., i - 1, :])

    @property
    def coords(self) -> list[WeilElement]:
        return [self.coord(i) for i in range(1, self.n + 1)]

    def real_coordinates(self) -> np.ndarray:
        """The n*r real coordinates, flattened coordinate-major."""
        return self.values.reshape(self.batch_shape + (-1,))

    def __repr__(self):
        return f"NearPoint({self.algebra.label}, n={self.n}, batch={self.batch_shape})"


def _taylor_coefficients(func: str, c: np.ndarray, h: int) -> list[np.ndarray]:
    """[g^(k)(c)/k! for k = 0..h] for the primitive g."""
    if func == "exp":
        e = np.exp(c)
        derivs = [e] * (h + 1)
    elif func in ("sin", "cos"):
        s, co = np.sin(c), np.cos(c)
        cycle = [s, co, -s, -co] if func == "sin" else [co, -s, -co, s]
        derivs = [cycle[k % 4] for k in range(h + 1)]
    elif func == "log":
        derivs = [np.log(c)]
        for k in range(1, h + 1):
            derivs.append((-1) ** (k - 1) * math.factorial(k - 1) / c ** k)
    elif func == "sqrt":
        derivs = []
        coef = 1.0
        for k in range(h + 1):
            derivs.append(coef * c ** (0.5 - k))
            coef *= 0.5 - k
    else:
        raise ValueError(f"unknown primitive {func!r}")
    return [d / math.factorial(k) for k, d in enumerate(derivs)]


def _weil_call(alg: WeilAlgebra, func: str, a: np.ndarray) -> np.ndarray:
    c = a[..., 0]
    if func == "log" and np.any(c <= 0):
        raise DomainError("log of a near point with non-positive real part")
    if func == "sqrt" and (np.any(c < 0) or (alg.height > 0 and np.any(c == 0))):
        raise DomainError("sqrt is not smooth at a non-positive real part")
    nu = a.copy()
    nu[..., 0] = 0.0
    coeffs = _taylor_coefficients(func, c, alg.height)
    out = coeffs[0][..., None] * alg.unit_coeffs()
    nu_k = None
    for k in range(1, alg.height + 1):
        nu_k = nu if nu_k is None else alg.mul_coeffs(nu_k, nu)
        out = out + coeffs[k][..., None] * nu_k
    return out


def eval_weil(f: Expr, xi: NearPoint, memo: dict | None = None) -> WeilElement:
    """Evaluate the prolongation f^A at the near point ``xi``.

    ``memo`` may be shared between calls on the same near point to reuse
    common subtrees.
    """
    return WeilElement(xi.algebra, eval_weil_coeffs(f, xi, memo))


def eval_weil_coeffs(f: Expr, xi: NearPoint, memo: dict | None = None) -> np.ndarray:
    alg = xi.algebra
    vals = xi.values
    batch = xi.batch_shape
    if memo is None:
        memo = {}

    def ev(e: Expr) -> np.ndarray:
        key = id(e)
        hit = memo.get(key)
        if hit is not None and hit[0] is e:
            return hit[1]
        if isinstance(e, Const):
            out = e.value * alg.unit_coeffs(batch)
        elif isinstance(e, Var):
            if e.index > xi.n:
                raise VariableOutOfRange(f"x{e.index} needs a near point of dimension >= {e.index}", 0)
            out = vals[..., e.index - 1, :]
        elif isinstance(e, Add):
            out = ev(e.left) + ev(e.right)
        elif isinstance(e, Sub):
            out = ev(e.left) - ev(e.right)
        elif isinstance(e, Mul):
            out = alg.mul_coeffs(ev(e.left), ev(e.right))
        elif isinstance(e, Div):
            den = ev(e.right)
            if np.any(np.abs(den[..., 0]) <= INVERT_TOL):
                raise DomainError("division by a near point with zero real part")
            out = alg.mul_coeffs(ev(e.left), alg.invert_coeffs(den))
        elif isinstance(e, Neg):
            out = -ev(e.arg)
        elif isinstance(e, Pow):
            b = ev(e.base)
            if e.exponent < 0:
                if np.any(np.abs(b[..., 0]) <= INVERT_TOL):
                    raise DomainError("negative power of a near point with zero real part")
                b = alg.invert_coeffs(b)
            out = alg.power_coeffs(b, abs(e.exponent))
        elif isinstance(e, Call):
            out = _weil_call(alg, e.func, ev(e.arg))
        else:
            raise TypeError(f"not an expression node: {e!r}")
        # keep e alive alongside its id so the key cannot be recycled
        memo[key] = (e, out)
        return out

    return ev(f)


# -- numeric identity testing ----------------------------------------------

def expr_equal_numeric(
    f: Expr,
    g: Expr,
    samples: int = 20,
    tol: float = 1e-9,
    *,
    n: int | None = None,
    rng: np.random.Generator | None = None,
) -> bool:
    """True iff |f - g| <= tol*(1 + |f|) at ``samples`` points of [-1, 1]^n.

    Points where either side raises DomainError are redrawn, up to ten times
    the requested number of draws in total.
    """
    if n is None:
        n = max(variables(f) | variables(g) | {1})
    rng = rng if rng is not None else np.random.default_rng(0)
    accepted = 0
    for _ in range(10 * samples):
        x = rng.uniform(-1.0, 1.0, size=n)
        try:
            fv = eval_real(f, x)
            gv = eval_real(g, x)
        except DomainError:
            continue
        if not abs(fv - gv) <= tol * (1.0 + abs(fv)):
            return False
        accepted += 1
        if accepted == samples:
            return True
    raise SamplingExhausted(f"only {accepted} of {samples} sample points were in the domain")
