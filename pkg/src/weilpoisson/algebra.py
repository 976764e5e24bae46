"""Weil algebras presented as quotients of R[T1..Ts] by monomial ideals.

Elements carry a coefficient array whose last axis runs over the monomial
basis; any leading axes are batch axes, so one ``WeilElement`` can hold many
values of the same algebra at once (this is how the sampling suites evaluate
many near points in a single pass).
"""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    AlgebraMismatch,
    AlgebraTooLarge,
    InfiniteDimensional,
    NotInvertible,
    SingularAugmentation,
    SpecSyntaxError,
)

DIM_CAP = 1024
INVERT_TOL = 1e-12
SOLVE_TOL = 1e-9
COND_GUARD = 1e12
SMALL_DIM = 24

Monomial = tuple[int, ...]


@dataclass(frozen=True)
class AlgebraSpec:
    """Presentation data for a monomial quotient of R[T1..Ts].

    ``kind`` is one of ``truncated_powers`` (uses ``orders``), ``power_ideal``
    (uses ``k``) or ``monomial_ideal`` (uses ``generators``).
    """

    kind: str
    s: int
    orders: tuple[int, ...] = ()
    k: int = 0
    generators: tuple[Monomial, ...] = ()

    @classmethod
    def truncated_powers(cls, orders: Sequence[int]) -> AlgebraSpec:
        orders = tuple(int(o) for o in orders)
        if any(o < 1 for o in orders):
            raise ValueError(f"truncation orders must be >= 1, got {orders}")
        return cls("truncated_powers", len(orders), orders=orders)

    @classmethod
    def power_ideal(cls, s: int, k: int) -> AlgebraSpec:
        if s < 0 or k < 1:
            raise ValueError(f"power_ideal needs s >= 0 and k >= 1, got s={s}, k={k}")
        return cls("power_ideal", int(s), k=int(k))

    @classmethod
    def monomial_ideal(cls, s: int, generators: Sequence[Sequence[int]]) -> AlgebraSpec:
        gens = tuple(tuple(int(e) for e in g) for g in generators)
        for g in gens:
            if len(g) != s or any(e < 0 for e in g):
                raise ValueError(f"generator {g} is not an exponent vector of length {s}")
        return cls("monomial_ideal", int(s), generators=gens)

    def ideal_generators(self) -> tuple[Monomial, ...]:
        if self.kind == "truncated_powers":
            return tuple(
                tuple(o if j == i else 0 for j in range(self.s))
                for i, o in enumerate(self.orders)
            )
        if self.kind == "power_ideal":
            return tuple(_monomials_of_degree(self.s, self.k))
        if self.kind == "monomial_ideal":
            return self.generators
        raise ValueError(f"unknown algebra kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.s == 0:
            return "R"
        names = [f"T{i + 1}" for i in range(self.s)]
        ring = f"R[{','.join(names)}]"
        if self.kind == "power_ideal":
            return f"{ring}/({','.join(names)})^{self.k}"
        gens = ",".join(_monomial_str(g) for g in self.ideal_generators())
        return f"{ring}/({gens})"


def _monomials_of_degree(s: int, k: int):
    for combo in itertools.combinations_with_replacement(range(s), k):
        exps = [0] * s
        for i in combo:
            exps[i] += 1
        yield tuple(exps)


def _monomial_str(exps: Monomial) -> str:
    parts = []
    for i, e in enumerate(exps):
        if e == 1:
            parts.append(f"T{i + 1}")
        elif e > 1:
            parts.append(f"T{i + 1}^{e}")
    return "*".join(parts) if parts else "1"


def _divides(g: Monomial, m: Monomial) -> bool:
    return all(a <= b for a, b in zip(g, m))


class WeilAlgebra:
    """A finite-dimensional local algebra with a monomial basis.

    Build instances with :func:`build_algebra`; they are immutable afterwards.
    """

    def __init__(self, spec: AlgebraSpec, basis: list[Monomial]):
        self.spec = spec
        self.s = spec.s
        self.basis: tuple[Monomial, ...] = tuple(basis)
        self.dim = len(self.basis)
        index = {m: i for i, m in enumerate(self.basis)}
        self._index = index

        # Encode exponent vectors as mixed-radix integers; a product survives iff
        # its encoded exponent sum is the code of some basis monomial.
        exps = np.array(self.basis, dtype=np.int64).reshape(self.dim, self.s)
        radix = 2 * int(exps.max(initial=0)) + 1
        weights = radix ** np.arange(self.s, dtype=np.int64)
        codes = exps @ weights
        order = np.argsort(codes)
        sums = codes[:, None] + codes[None, :]
        pos = np.minimum(np.searchsorted(codes[order], sums), self.dim - 1)
        table = np.where(codes[order][pos] == sums, order[pos], -1).astype(np.int64)
        table.setflags(write=False)
        self.table = table

        # Nonzero products sorted by target index, so a product is one gather,
        # one elementwise multiply and one segmented sum.
        ii, jj = np.nonzero(table >= 0)
        kk = table[ii, jj]
        order = np.argsort(kk, kind="stable")
        self._i, self._j, kk = ii[order], jj[order], kk[order]
        self._targets, self._starts = np.unique(kk, return_index=True)
        # Small algebras multiply through one outer product and one matmul.
        self._fold = None
        if self.dim <= SMALL_DIM:
            fold = np.zeros((self.dim * self.dim, self.dim))
            fold[ii * self.dim + jj, table[ii, jj]] = 1.0
            self._fold = fold

        self.degrees = np.array([sum(m) for m in self.basis], dtype=np.int64)
        self.height = int(self.degrees.max())
        self.ann_basis = tuple(int(i) for i in _annihilator_indices(self))

    # -- identity -----------------------------------------------------------
    def __eq__(self, other):
        return isinstance(other, WeilAlgebra) and self.spec == other.spec

    def __hash__(self):
        return hash(self.spec)

    def __repr__(self):
        return f"WeilAlgebra({self.label!r}, dim={self.dim}, height={self.height})"

    @property
    def label(self) -> str:
        return self.spec.label

    def monomial_names(self) -> list[str]:
        return [_monomial_str(m) for m in self.basis]

    def index_of(self, exps: Sequence[int]) -> int:
        try:
            return self._index[tuple(exps)]
        except KeyError:
            raise KeyError(f"{_monomial_str(tuple(exps))} is zero in {self.label}") from None

    # -- raw coefficient arithmetic (broadcasts over leading axes) -----------
    def mul_coeffs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self._fold is not None:
            outer = a[..., :, None] * b[..., None, :]
            return outer.reshape(outer.shape[:-2] + (self.dim * self.dim,)) @ self._fold
        contrib = a[..., self._i] * b[..., self._j]
        out = np.zeros(contrib.shape[:-1] + (self.dim,))
        out[..., self._targets] = np.add.reduceat(contrib, self._starts, axis=-1)
        return out

    def mul_matrix(self, a: np.ndarray) -> np.ndarray:
        """Real matrix of y -> a*y (shape ``(..., r, r)``)."""
        a = np.asarray(a, dtype=float)
        out = np.zeros(a.shape[:-1] + (self.dim, self.dim))
        # for a fixed column j, distinct i land on distinct rows
        out[..., self.table[self._i, self._j], self._j] = a[..., self._i]
        return out

    def power_coeffs(self, a: np.ndarray, k: int) -> np.ndarray:
        result = self.unit_coeffs(np.shape(a)[:-1])
        base = np.asarray(a, dtype=float)
        while k:
            if k & 1:
                result = self.mul_coeffs(result, base)
            k >>= 1
            if k:
                base = self.mul_coeffs(base, base)
        return result

    def unit_coeffs(self, batch: tuple[int, ...] = ()) -> np.ndarray:
        out = np.zeros(tuple(batch) + (self.dim,))
        out[..., 0] = 1.0
        return out

    def invert_coeffs(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        c = a[..., 0]
        if np.any(np.abs(c) <= INVERT_TOL):
            raise NotInvertible(f"augmentation {c} vanishes in {self.label}")
        q = -a / c[..., None]
        q[..., 0] = 0.0
        # 1/(c + n) = (1/c) * sum_j (-n/c)^j, finite because n^(h+1) = 0
        total = self.unit_coeffs(c.shape)
        term = total
        for _ in range(self.height):
            term = self.mul_coeffs(term, q)
            total = total + term
        return total / c[..., None]

    # -- element constructors -----------------------------------------------
    def element(self, coeffs) -> WeilElement:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[-1:] != (self.dim,):
            raise ValueError(f"expected trailing axis of length {self.dim}, got shape {coeffs.shape}")
        return WeilElement(self, coeffs)

    def unit(self) -> WeilElement:
        return WeilElement(self, self.unit_coeffs())

    def zero(self) -> WeilElement:
        return WeilElement(self, np.zeros(self.dim))

    def scalar(self, c: float) -> WeilElement:
        return WeilElement(self, c * self.unit_coeffs())

    def gen(self, i: int) -> WeilElement:
        """The class of the generator T_i (1-based), zero if T_i lies in the ideal."""
        exps = tuple(1 if j == i - 1 else 0 for j in range(self.s))
        out = np.zeros(self.dim)
        if exps in self._index:
            out[self._index[exps]] = 1.0
        return WeilElement(self, out)

    def basis_element(self, idx: int) -> WeilElement:
        out = np.zeros(self.dim)
        out[idx] = 1.0
        return WeilElement(self, out)

    def random_element(self, rng: np.random.Generator, size=(), *, nilpotent=False) -> WeilElement:
        size = (size,) if isinstance(size, int) else tuple(size)
        coeffs = rng.uniform(-1.0, 1.0, size=size + (self.dim,))
        if nilpotent:
            coeffs[..., 0] = 0.0
        return WeilElement(self, coeffs)


def _annihilator_indices(alg: WeilAlgebra) -> np.ndarray:
    """Basis indices spanning ann(m), read off the kernel of a -> (a*T_i)_i.

    m is generated by T1..Ts, so a kills m iff it kills every generator.  For
    monomial quotients the columns of the stacked map are zero or mutually
    orthogonal, hence the kernel is spanned by the zero columns; the rank
    computation confirms that count.
    """
    if alg.dim == 1:
        return np.array([0])
    blocks = []
    for i in range(alg.s):
        exps = tuple(1 if j == i else 0 for j in range(alg.s))
        if exps in alg._index:
            blocks.append(_right_mul_by_basis(alg, alg._index[exps]))
    big = np.vstack(blocks)
    zero_cols = np.flatnonzero(~big.any(axis=0))
    rank = np.linalg.matrix_rank(big, tol=1e-12)
    if alg.dim - rank != len(zero_cols):
        raise AssertionError("annihilator kernel is not spanned by monomials")
    return zero_cols


def _right_mul_by_basis(alg: WeilAlgebra, beta: int) -> np.ndarray:
    """Matrix of a -> a * e_beta."""
    mat = np.zeros((alg.dim, alg.dim))
    for i in range(alg.dim):
        k = alg.table[i, beta]
        if k >= 0:
            mat[k, i] = 1.0
    return mat


@functools.lru_cache(maxsize=None)
def build_algebra(spec: AlgebraSpec | str) -> WeilAlgebra:
    """Build the quotient algebra described by ``spec`` (an AlgebraSpec or spec string)."""
    if isinstance(spec, str):
        spec = parse_algebra_spec(spec)
    s = spec.s
    gens = spec.ideal_generators()
    if s > 0:
        for i in range(s):
            if not any(g[i] > 0 and sum(g) == g[i] for g in gens):
                raise InfiniteDimensional(f"no pure power of T{i + 1} lies in the ideal of {spec.label}")
    if any(sum(g) == 0 for g in gens):
        raise ValueError(f"the ideal of {spec.label} contains 1; the quotient is zero")

    # The surviving monomials form an order ideal, so grow them degree by degree.
    unit = (0,) * s
    basis = [unit]
    seen = {unit}
    frontier = [unit]
    while frontier:
        nxt = []
        for m in frontier:
            for i in range(s):
                cand = m[:i] + (m[i] + 1,) + m[i + 1:]
                if cand in seen or any(_divides(g, cand) for g in gens):
                    continue
                seen.add(cand)
                nxt.append(cand)
                if len(seen) > DIM_CAP:
                    raise AlgebraTooLarge(f"{spec.label} has more than {DIM_CAP} basis monomials")
        basis.extend(nxt)
        frontier = nxt
    basis.sort(key=lambda m: (sum(m), tuple(-e for e in m)))
    return WeilAlgebra(spec, basis)


class WeilElement:
    """Value in a Weil algebra; ``coeffs[..., 0]`` is the real part."""

    __slots__ = ("algebra", "coeffs")
    __array_priority__ = 1000

    def __init__(self, algebra: WeilAlgebra, coeffs: np.ndarray):
        self.algebra = algebra
        self.coeffs = coeffs

    def _coerce(self, other):
        if isinstance(other, WeilElement):
            if other.algebra != self.algebra:
                raise AlgebraMismatch(f"{self.algebra.label} vs {other.algebra.label}")
            return other.coeffs
        if isinstance(other, (int, float, np.floating, np.integer)):
            return float(other) * self.algebra.unit_coeffs()
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return WeilElement(self.algebra, self.coeffs + o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return WeilElement(self.algebra, self.coeffs - o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return WeilElement(self.algebra, o - self.coeffs)

    def __neg__(self):
        return WeilElement(self.algebra, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return WeilElement(self.algebra, self.coeffs * float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return WeilElement(self.algebra, self.algebra.mul_coeffs(self.coeffs, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return WeilElement(self.algebra, self.coeffs / float(other))
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * WeilElement(self.algebra, self.algebra.invert_coeffs(o))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return WeilElement(self.algebra, o) * invert(self)

    def __pow__(self, k: int):
        if int(k) != k:
            raise TypeError("only integer powers are supported")
        k = int(k)
        base = self if k >= 0 else invert(self)
        return WeilElement(self.algebra, self.algebra.power_coeffs(base.coeffs, abs(k)))

    @property
    def augmentation(self):
        return self.coeffs[..., 0]

    @property
    def nilpotent_part(self) -> WeilElement:
        c = self.coeffs.copy()
        c[..., 0] = 0.0
        return WeilElement(self.algebra, c)

    @property
    def shape(self):
        return self.coeffs.shape[:-1]

    def allclose(self, other, atol=1e-9, rtol=0.0) -> bool:
        return bool(np.allclose(self.coeffs, self._coerce(other), atol=atol, rtol=rtol))

    def __repr__(self):
        if self.coeffs.ndim > 1:
            return f"WeilElement({self.algebra.label}, batch={self.shape})"
        parts = []
        for c, name in zip(self.coeffs, self.algebra.monomial_names()):
            if c == 0:
                continue
            parts.append(f"{c:g}" if name == "1" else f"{c:g}*{name}")
        return " + ".join(parts).replace("+ -", "- ") or "0"


# -- functional API ---------------------------------------------------------

def _check_same(x: WeilElement, y: WeilElement):
    if x.algebra != y.algebra:
        raise AlgebraMismatch(f"{x.algebra.label} vs {y.algebra.label}")


def mul(x: WeilElement, y: WeilElement) -> WeilElement:
    _check_same(x, y)
    return x * y


def add(x: WeilElement, y: WeilElement) -> WeilElement:
    _check_same(x, y)
    return x + y


def sub(x: WeilElement, y: WeilElement) -> WeilElement:
    _check_same(x, y)
    return x - y


def scale(c: float, x: WeilElement) -> WeilElement:
    return x * float(c)


def neg(x: WeilElement) -> WeilElement:
    return -x


def augmentation(x: WeilElement):
    return x.augmentation


def nilpotent_part(x: WeilElement) -> WeilElement:
    return x.nilpotent_part


def compute_height(alg: WeilAlgebra) -> int:
    return alg.height


def annihilator_of_m(alg: WeilAlgebra) -> list[WeilElement]:
    return [alg.basis_element(i) for i in alg.ann_basis]


def invert(x: WeilElement) -> WeilElement:
    return WeilElement(x.algebra, x.algebra.invert_coeffs(x.coeffs))


def solve_local_arrays(alg: WeilAlgebra, mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``mat @ x = rhs`` over A.

    ``mat`` has shape ``(..., N, N, r)`` and ``rhs`` shape ``(..., N, r)``.
    Splits mat = M0 + N with M0 real and N nilpotent, then iterates
    x <- M0^{-1} (rhs - N x) exactly height+1 times.
    """
    mat = np.asarray(mat, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    m0 = mat[..., 0]
    if np.any(np.linalg.cond(m0) > COND_GUARD):
        raise SingularAugmentation("augmented matrix is singular or badly conditioned")
    nil = mat.copy()
    nil[..., 0] = 0.0
    m0_inv = np.linalg.inv(m0)
    x = np.zeros(np.broadcast_shapes(mat.shape[:-3], rhs.shape[:-2]) + rhs.shape[-2:])
    for _ in range(alg.height + 1):
        nx = alg.mul_coeffs(nil, x[..., None, :, :]).sum(axis=-2)
        x = np.einsum("...ij,...jr->...ir", m0_inv, rhs - nx)
    return x


def local_matvec(alg: WeilAlgebra, mat: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return alg.mul_coeffs(mat, vec[..., None, :, :]).sum(axis=-2)


def solve_linear_local(M: Sequence[Sequence[WeilElement]], b: Sequence[WeilElement]) -> list[WeilElement]:
    """Solve the square system M x = b whose entries lie in one Weil algebra."""
    alg = b[0].algebra
    for row in M:
        for entry in row:
            _check_same(entry, b[0])
    for entry in b:
        _check_same(entry, b[0])
    mat = np.stack([np.stack(np.broadcast_arrays(*[e.coeffs for e in row]), axis=-2) for row in M], axis=-3)
    rhs = np.stack(np.broadcast_arrays(*[e.coeffs for e in b]), axis=-2)
    x = solve_local_arrays(alg, mat, rhs)
    return [WeilElement(alg, x[..., i, :]) for i in range(x.shape[-2])]


@dataclass(frozen=True, eq=False)
class LinearForm:
    """Real linear form on A, given by its values on the monomial basis."""

    algebra: WeilAlgebra
    coeffs: np.ndarray

    def __call__(self, x: WeilElement):
        return eval_form(self, x)


def eval_form(psi: LinearForm, x: WeilElement):
    _check_same(psi, x)
    return x.coeffs @ np.asarray(psi.coeffs, dtype=float)


def dual_basis(alg: WeilAlgebra) -> list[LinearForm]:
    return [LinearForm(alg, row) for row in np.eye(alg.dim)]


# -- spec-string parsing ----------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>T\d*)|(?P<sym>[\[\]\(\)/,^*R]))")


def _tokenize(text: str):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise SpecSyntaxError(f"unexpected character {text[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def parse_algebra_spec(text: str) -> AlgebraSpec:
    """Parse strings such as ``R[T1,T2]/(T1^2,T2^3)`` or ``R[T1,T2]/(T1,T2)^2``.

    A general monomial generator list (``R[T1,T2]/(T1^2,T1*T2,T2^3)``) is also
    accepted and yields a ``monomial_ideal`` spec.
    """
    toks = _tokenize(text)
    pos = 0

    def peek():
        return toks[pos]

    def expect(kind, value=None):
        nonlocal pos
        tk = toks[pos]
        if tk[0] != kind or (value is not None and tk[1] != value):
            want = value if value is not None else kind
            raise SpecSyntaxError(f"expected {want!r}, found {tk[1] or 'end of input'!r}", tk[2])
        pos += 1
        return tk

    def var_index(tk):
        digits = tk[1][1:]
        if not digits:
            raise SpecSyntaxError("variables must be written T1..Ts", tk[2])
        return int(digits)

    def integer():
        tk = expect("num")
        return int(tk[1])

    expect("sym", "R")
    if peek()[0] == "end":
        return AlgebraSpec.truncated_powers([])
    expect("sym", "[")
    s = 0
    while True:
        tk = expect("var")
        if var_index(tk) != s + 1:
            raise SpecSyntaxError(f"expected T{s + 1}", tk[2])
        s += 1
        if peek()[1] == ",":
            pos += 1
            continue
        break
    expect("sym", "]")
    expect("sym", "/")
    expect("sym", "(")

    gens = []
    while True:
        exps = [0] * s
        while True:
            tk = expect("var")
            i = var_index(tk)
            if not 1 <= i <= s:
                raise SpecSyntaxError(f"T{i} is not a variable of R[T1..T{s}]", tk[2])
            e = 1
            if peek()[1] == "^":
                pos += 1
                e = integer()
                if e < 1:
                    raise SpecSyntaxError("exponents must be >= 1", toks[pos - 1][2])
            exps[i - 1] += e
            if peek()[1] == "*":
                pos += 1
                continue
            break
        gens.append(tuple(exps))
        if peek()[1] == ",":
            pos += 1
            continue
        break
    expect("sym", ")")

    if peek()[1] == "^":
        caret = peek()[2]
        pos += 1
        k = integer()
        expect("end")
        identity = [tuple(1 if j == i else 0 for j in range(s)) for i in range(s)]
        if gens != identity:
            raise SpecSyntaxError("a power ideal must be written (T1,..,Ts)^k", caret)
        return AlgebraSpec.power_ideal(s, k)
    expect("end")

    pure = len(gens) == s and all(
        g[i] >= 1 and sum(g) == g[i] for i, g in enumerate(gens)
    )
    if pure:
        return AlgebraSpec.truncated_powers([g[i] for i, g in enumerate(gens)])
    return AlgebraSpec.monomial_ideal(s, gens)

