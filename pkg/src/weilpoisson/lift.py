"""Prolongation of functions, vector fields and forms from R^n to (R^n)^A.

The A-valued functions handled here come in two flavours:

* :class:`LiftedFunction` -- finite sums ``sum a_k * f_k^A`` with ``a_k`` in A
  and ``f_k`` expressions.  This class contains every lift, every A-constant,
  and is closed under sums, products, brackets and the derivations X~.
* :class:`PointwiseFunction` -- anything that can only be evaluated point by
  point (for instance components obtained from a linear solve over A).

Vector fields on M^A are stored as derivations C(M) -> C(M^A, A) through their
components on the lifted coordinate fields (d/dx_i)^A.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .algebra import WeilAlgebra, WeilElement
from .errors import AlgebraMismatch, UnrepresentableBracket
from .expr import (
    ONE,
    ZERO,
    Const,
    Expr,
    NearPoint,
    add,
    as_expr,
    eval_real,
    eval_weil_coeffs,
    mul,
    parse,
    partial,
    sub,
    to_string,
)


def _same(a, b):
    if a.algebra != b.algebra or a.n != b.n:
        raise AlgebraMismatch(
            f"({a.algebra.label}, n={a.n}) vs ({b.algebra.label}, n={b.n})"
        )


def _scalar_coeffs(alg: WeilAlgebra, a) -> np.ndarray:
    if isinstance(a, WeilElement):
        if a.algebra != alg:
            raise AlgebraMismatch(f"{a.algebra.label} vs {alg.label}")
        if a.coeffs.ndim != 1:
            raise ValueError("A-scalars must not carry batch axes")
        return a.coeffs
    return float(a) * alg.unit_coeffs()


class AFunction:
    """Common arithmetic for A-valued functions on (R^n)^A."""

    algebra: WeilAlgebra
    n: int

    def evaluate(self, xi: NearPoint) -> WeilElement:
        return WeilElement(self.algebra, self.evaluate_coeffs(xi))

    def evaluate_coeffs(self, xi: NearPoint, memo=None) -> np.ndarray:
        raise NotImplementedError

    __call__ = evaluate

    def _pointwise(self, other, op):
        _same(self, other)
        a, b = self, other
        return PointwiseFunction(self.algebra, self.n, lambda xi: op(a.evaluate_coeffs(xi), b.evaluate_coeffs(xi)))

    def __add__(self, other):
        return self._pointwise(other, np.add)

    def __sub__(self, other):
        return self._pointwise(other, np.subtract)

    def __mul__(self, other):
        if isinstance(other, AFunction):
            return self._pointwise(other, self.algebra.mul_coeffs)
        c = _scalar_coeffs(self.algebra, other)
        a = self
        return PointwiseFunction(self.algebra, self.n, lambda xi: self.algebra.mul_coeffs(c, a.evaluate_coeffs(xi)))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        a = self
        return PointwiseFunction(self.algebra, self.n, lambda xi: -a.evaluate_coeffs(xi))


class PointwiseFunction(AFunction):
    """A-valued function known only through evaluation at near points."""

    def __init__(self, algebra: WeilAlgebra, n: int, fn: Callable[[NearPoint], np.ndarray]):
        self.algebra = algebra
        self.n = n
        self.fn = fn

    def evaluate_coeffs(self, xi, memo=None):
        if xi.algebra != self.algebra:
            raise AlgebraMismatch(f"{xi.algebra.label} vs {self.algebra.label}")
        return np.asarray(self.fn(xi), dtype=float)

    def __repr__(self):
        return f"PointwiseFunction({self.algebra.label}, n={self.n})"


class LiftedFunction(AFunction):
    """Finite sum ``sum a_k * f_k^A``; terms are (coefficient array, Expr) pairs."""

    def __init__(self, algebra: WeilAlgebra, n: int, terms: Iterable[tuple[np.ndarray, Expr]] = ()):
        self.algebra = algebra
        self.n = n
        kept = []
        for a, f in terms:
            a = np.asarray(a, dtype=float)
            if not a.any() or (isinstance(f, Const) and f.value == 0.0):
                continue
            kept.append((a, f))
        self.terms: tuple[tuple[np.ndarray, Expr], ...] = tuple(kept)

    @classmethod
    def constant(cls, algebra: WeilAlgebra, n: int, a) -> LiftedFunction:
        return cls(algebra, n, [(_scalar_coeffs(algebra, a), ONE)])

    @classmethod
    def zero(cls, algebra: WeilAlgebra, n: int) -> LiftedFunction:
        return cls(algebra, n, [])

    def evaluate_coeffs(self, xi: NearPoint, memo=None) -> np.ndarray:
        if xi.algebra != self.algebra:
            raise AlgebraMismatch(f"{xi.algebra.label} vs {self.algebra.label}")
        memo = {} if memo is None else memo
        out = np.zeros(xi.batch_shape + (self.algebra.dim,))
        for a, f in self.terms:
            out = out + self.algebra.mul_coeffs(a, eval_weil_coeffs(f, xi, memo))
        return out

    def __add__(self, other):
        if isinstance(other, LiftedFunction):
            _same(self, other)
            return LiftedFunction(self.algebra, self.n, self.terms + other.terms)
        return super().__add__(other)

    def __sub__(self, other):
        if isinstance(other, LiftedFunction):
            return self + (-other)
        return super().__sub__(other)

    def __neg__(self):
        return LiftedFunction(self.algebra, self.n, [(-a, f) for a, f in self.terms])

    def __mul__(self, other):
        if isinstance(other, LiftedFunction):
            _same(self, other)
            mulc = self.algebra.mul_coeffs
            return LiftedFunction(
                self.algebra,
                self.n,
                [(mulc(a, b), mul(f, g)) for a, f in self.terms for b, g in other.terms],
            )
        if isinstance(other, AFunction):
            return super().__mul__(other)
        c = _scalar_coeffs(self.algebra, other)
        return LiftedFunction(self.algebra, self.n, [(self.algebra.mul_coeffs(c, a), f) for a, f in self.terms])

    def __repr__(self):
        return f"LiftedFunction({self.algebra.label}, n={self.n}, terms={len(self.terms)})"

    def to_json(self) -> list:
        return [[a.tolist(), to_string(f)] for a, f in self.terms]

    @classmethod
    def from_json(cls, algebra: WeilAlgebra, n: int, data: Sequence) -> LiftedFunction:
        return cls(algebra, n, [(np.asarray(a, dtype=float), parse(src, n)) for a, src in data])


def lift_function(f: Expr | float, algebra: WeilAlgebra, n: int) -> LiftedFunction:
    """The prolongation f^A as a one-term LiftedFunction."""
    return LiftedFunction(algebra, n, [(algebra.unit_coeffs(), as_expr(f))])


def component_extract(phi: AFunction, alpha: int) -> Callable[[np.ndarray], np.ndarray]:
    """Real-valued function xi -> a_alpha^*(phi(xi)) of the n*r real coordinates."""
    if not 0 <= alpha < phi.algebra.dim:
        raise IndexError(f"basis index {alpha} out of range for {phi.algebra.label}")

    def component(real_coords) -> np.ndarray:
        real_coords = np.asarray(real_coords, dtype=float)
        values = real_coords.reshape(real_coords.shape[:-1] + (phi.n, phi.algebra.dim))
        return phi.evaluate_coeffs(NearPoint(phi.algebra, values))[..., alpha]

    return component


# -- vector fields ----------------------------------------------------------

class VectorFieldBase:
    """Vector field sum theta^i d/dx_i on R^n with expression components."""

    def __init__(self, components: Sequence[Expr]):
        self.components = tuple(as_expr(c) for c in components)

    @property
    def n(self) -> int:
        return len(self.components)

    def apply(self, f: Expr) -> Expr:
        out = ZERO
        for i, c in enumerate(self.components, start=1):
            out = add(out, mul(c, partial(f, i)))
        return out

    __call__ = apply

    def at(self, x) -> np.ndarray:
        return np.array([eval_real(c, x) for c in self.components])

    def __repr__(self):
        return "VectorFieldBase(" + ", ".join(to_string(c) for c in self.components) + ")"


def lie_bracket_base(theta: VectorFieldBase, eta: VectorFieldBase) -> VectorFieldBase:
    """[theta, eta]^i = theta(eta^i) - eta(theta^i)."""
    return VectorFieldBase([sub(theta.apply(b), eta.apply(a)) for a, b in zip(theta.components, eta.components)])


def coordinate_field_base(n: int, i: int) -> VectorFieldBase:
    return VectorFieldBase([ONE if j == i else ZERO for j in range(1, n + 1)])


class VectorFieldA:
    """Vector field on (R^n)^A: f -> sum_i X^i * (d f/dx_i)^A.

    ``values_fn`` optionally evaluates all components at once (shape
    ``(..., n, r)``); fields obtained from linear solves use it to share one
    solve between components.
    """

    def __init__(self, algebra: WeilAlgebra, n: int, components: Sequence[AFunction], values_fn=None):
        if len(components) != n:
            raise ValueError(f"expected {n} components, got {len(components)}")
        for c in components:
            if c.algebra != algebra or c.n != n:
                raise AlgebraMismatch("vector field components live on different spaces")
        self.algebra = algebra
        self.n = n
        self.components = tuple(components)
        self.values_fn = values_fn

    @classmethod
    def from_values(cls, algebra: WeilAlgebra, n: int, values_fn: Callable[[NearPoint], np.ndarray]) -> VectorFieldA:
        comps = [PointwiseFunction(algebra, n, lambda xi, i=i: values_fn(xi)[..., i, :]) for i in range(n)]
        return cls(algebra, n, comps, values_fn=values_fn)

    @property
    def symbolic(self) -> bool:
        return all(isinstance(c, LiftedFunction) for c in self.components)

    def component_values(self, xi: NearPoint) -> np.ndarray:
        if self.values_fn is not None:
            return np.asarray(self.values_fn(xi), dtype=float)
        memo = {}
        return np.stack([c.evaluate_coeffs(xi, memo) for c in self.components], axis=-2)

    def apply(self, f: Expr) -> AFunction:
        """X(f) = sum_i X^i * (df/dx_i)^A."""
        return extend_derivation(self, lift_function(f, self.algebra, self.n))

    __call__ = apply

    def __add__(self, other: VectorFieldA) -> VectorFieldA:
        _same(self, other)
        return VectorFieldA(self.algebra, self.n, [a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other: VectorFieldA) -> VectorFieldA:
        _same(self, other)
        return VectorFieldA(self.algebra, self.n, [a - b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorFieldA(self.algebra, self.n, [-c for c in self.components])

    def __mul__(self, other) -> VectorFieldA:
        """Module structure: multiply every component by an A-scalar or an A-function."""
        return VectorFieldA(self.algebra, self.n, [c * other for c in self.components])

    __rmul__ = __mul__

    def __repr__(self):
        kind = "symbolic" if self.symbolic else "pointwise"
        return f"VectorFieldA({self.algebra.label}, n={self.n}, {kind})"


def lift_vector_field(theta: VectorFieldBase, algebra: WeilAlgebra) -> VectorFieldA:
    """theta^A: f -> [theta(f)]^A, with components (theta^i)^A."""
    return VectorFieldA(algebra, theta.n, [lift_function(c, algebra, theta.n) for c in theta.components])


def coordinate_field(algebra: WeilAlgebra, n: int, i: int) -> VectorFieldA:
    """(d/dx_i)^A for 1-based i."""
    return lift_vector_field(coordinate_field_base(n, i), algebra)


def extend_derivation(X: VectorFieldA, phi: AFunction) -> AFunction:
    """X~(phi), the A-linear derivation of C(M^A, A) extending X.

    On ``sum a_k f_k^A`` A-linearity forces ``X~(phi) = sum a_k X(f_k)``.
    """
    _same(X, phi)
    if not isinstance(phi, LiftedFunction):
        raise UnrepresentableBracket("X~ is only computable on finite sums of lifted functions")
    alg, n = X.algebra, X.n
    if X.symbolic:
        terms = []
        for a, f in phi.terms:
            for j, comp in enumerate(X.components, start=1):
                df = partial(f, j)
                if isinstance(df, Const) and df.value == 0.0:
                    continue
                for b, g in comp.terms:
                    terms.append((alg.mul_coeffs(a, b), mul(g, df)))
        return LiftedFunction(alg, n, terms)

    grads = [(a, [partial(f, j) for j in range(1, n + 1)]) for a, f in phi.terms]

    def value(xi: NearPoint) -> np.ndarray:
        comps = X.component_values(xi)
        memo = {}
        out = np.zeros(xi.batch_shape + (alg.dim,))
        for a, dfs in grads:
            acc = np.zeros_like(out)
            for j, df in enumerate(dfs):
                if isinstance(df, Const) and df.value == 0.0:
                    continue
                acc = acc + alg.mul_coeffs(comps[..., j, :], eval_weil_coeffs(df, xi, memo))
            out = out + alg.mul_coeffs(a, acc)
        return out

    return PointwiseFunction(alg, n, value)


def bracket_fields(X: VectorFieldA, Y: VectorFieldA) -> VectorFieldA:
    """[X, Y] with components X~(Y^i) - Y~(X^i)."""
    _same(X, Y)
    if not (X.symbolic and Y.symbolic):
        raise UnrepresentableBracket("brackets need both fields to have lifted-class components")
    comps = [extend_derivation(X, yi) - extend_derivation(Y, xi) for xi, yi in zip(X.components, Y.components)]
    return VectorFieldA(X.algebra, X.n, comps)


# -- differential forms -----------------------------------------------------

def _sort_with_sign(idx: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``idx`` (0 if an index repeats) and the sorted tuple."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        return 0, tuple(sorted(idx))
    sign = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign, tuple(sorted(idx))


def _perm_sign(perm: Sequence[int]) -> int:
    return _sort_with_sign(perm)[0]


class Form:
    """Differential p-form on R^n with expression coefficients over increasing multi-indices."""

    def __init__(self, n: int, degree: int, coeffs: Mapping[tuple[int, ...], Expr | float | str]):
        self.n = n
        self.degree = degree
        table: dict[tuple[int, ...], Expr] = {}
        for idx, c in coeffs.items():
            idx = tuple(idx)
            if len(idx) != degree or any(not 1 <= i <= n for i in idx):
                raise ValueError(f"multi-index {idx} does not fit a {degree}-form on R^{n}")
            sign, key = _sort_with_sign(idx)
            if sign == 0:
                continue
            e = parse(c, n) if isinstance(c, str) else as_expr(c)
            e = e if sign > 0 else -e
            table[key] = add(table[key], e) if key in table else e
        self.coeffs = table

    def coefficient(self, idx: Sequence[int]) -> Expr:
        sign, key = _sort_with_sign(idx)
        if sign == 0 or key not in self.coeffs:
            return ZERO
        return self.coeffs[key] if sign > 0 else -self.coeffs[key]

    def __call__(self, *fields: VectorFieldBase) -> Expr:
        if len(fields) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} arguments")
        out = ZERO
        for key, c in self.coeffs.items():
            for perm in itertools.permutations(range(self.degree)):
                term = c if _perm_sign(perm) > 0 else -c
                for k, p in enumerate(perm):
                    term = mul(term, fields[k].components[key[p] - 1])
                out = add(out, term)
        return out

    def __repr__(self):
        body = " + ".join(f"({to_string(c)}) d{'^d'.join(f'x{i}' for i in k)}" for k, c in self.coeffs.items())
        return f"Form(deg={self.degree}, {body or '0'})"


def exterior_derivative(omega: Form) -> Form:
    """(d omega)_J = sum_k (-1)^k d/dx_{J_k} omega_{J without J_k}."""
    n, p = omega.n, omega.degree
    coeffs = {}
    for J in itertools.combinations(range(1, n + 1), p + 1):
        total = ZERO
        for k, j in enumerate(J):
            rest = J[:k] + J[k + 1:]
            if rest in omega.coeffs:
                term = partial(omega.coeffs[rest], j)
                total = add(total, term) if k % 2 == 0 else sub(total, term)
        if not (isinstance(total, Const) and total.value == 0.0):
            coeffs[J] = total
    return Form(n, p + 1, coeffs)


def interior_product_base(theta: VectorFieldBase, omega: Form) -> Form:
    """i_theta omega, contracting the first slot."""
    if omega.degree < 1:
        raise ValueError("interior product needs a form of degree >= 1")
    n, p = omega.n, omega.degree
    coeffs = {}
    for J in itertools.combinations(range(1, n + 1), p - 1):
        total = ZERO
        for i in range(1, n + 1):
            c = omega.coefficient((i,) + J)
            if not (isinstance(c, Const) and c.value == 0.0):
                total = add(total, mul(theta.components[i - 1], c))
        if not (isinstance(total, Const) and total.value == 0.0):
            coeffs[J] = total
    return Form(n, p - 1, coeffs)


class FormA:
    """Differential A-form of degree p on (R^n)^A, coefficients over increasing multi-indices."""

    def __init__(self, algebra: WeilAlgebra, n: int, degree: int, coeffs: Mapping[tuple[int, ...], AFunction]):
        self.algebra = algebra
        self.n = n
        self.degree = degree
        self.coeffs = {tuple(k): v for k, v in coeffs.items()}
        for k, v in self.coeffs.items():
            if list(k) != sorted(set(k)) or len(k) != degree:
                raise ValueError(f"FormA keys must be increasing {degree}-tuples, got {k}")
            if v.algebra != algebra or v.n != n:
                raise AlgebraMismatch("form coefficients live on different spaces")

    def coefficient(self, idx: Sequence[int]) -> AFunction:
        sign, key = _sort_with_sign(idx)
        if sign == 0 or key not in self.coeffs:
            return LiftedFunction.zero(self.algebra, self.n)
        return self.coeffs[key] if sign > 0 else -self.coeffs[key]

    def __call__(self, *fields: VectorFieldA) -> AFunction:
        """Multilinear, alternating evaluation on p vector fields."""
        if len(fields) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} arguments")
        for X in fields:
            _same(self, X)
        out: AFunction = LiftedFunction.zero(self.algebra, self.n)
        for key, c in self.coeffs.items():
            for perm in itertools.permutations(range(self.degree)):
                term = c if _perm_sign(perm) > 0 else -c
                for k, p in enumerate(perm):
                    term = term * fields[k].components[key[p] - 1]
                out = out + term
        return out

    def __repr__(self):
        return f"FormA({self.algebra.label}, n={self.n}, degree={self.degree}, terms={len(self.coeffs)})"


def lift_form(omega: Form, algebra: WeilAlgebra) -> FormA:
    """omega^A: coefficientwise lift, so that omega^A(theta_1^A, ..) = [omega(theta_1, ..)]^A."""
    return FormA(
        algebra,
        omega.n,
        omega.degree,
        {k: lift_function(c, algebra, omega.n) for k, c in omega.coeffs.items()},
    )


def d_A(eta: FormA) -> FormA:
    """Exterior derivative of an A-form, computed coefficientwise by A-linearity."""
    alg, n, p = eta.algebra, eta.n, eta.degree
    coeffs = {}
    for J in itertools.combinations(range(1, n + 1), p + 1):
        total: AFunction = LiftedFunction.zero(alg, n)
        for k, j in enumerate(J):
            rest = J[:k] + J[k + 1:]
            if rest not in eta.coeffs:
                continue
            term = extend_derivation(coordinate_field(alg, n, j), eta.coeffs[rest])
            total = total + term if k % 2 == 0 else total - term
        if not (isinstance(total, LiftedFunction) and not total.terms):
            coeffs[J] = total
    return FormA(alg, n, p + 1, coeffs)


def d_A_palais_oracle(eta: FormA, fields: Sequence[VectorFieldA], xi: NearPoint) -> WeilElement:
    """(d^A eta)(X_1..X_{p+1}) at xi from the alternating-sum (Palais) formula.

    Used only as an independent check on :func:`d_A`.
    """
    p = eta.degree
    if len(fields) != p + 1:
        raise ValueError(f"need {p + 1} vector fields for a {p}-form")
    for X in fields:
        _same(eta, X)
        if not X.symbolic:
            raise UnrepresentableBracket("the oracle needs fields with lifted-class components")
    alg = eta.algebra
    total = np.zeros(xi.batch_shape + (alg.dim,))
    for i, Xi in enumerate(fields):
        rest = [X for k, X in enumerate(fields) if k != i]
        inner = eta(*rest)
        val = extend_derivation(Xi, inner).evaluate_coeffs(xi)
        total = total + val if i % 2 == 0 else total - val
    for i, j in itertools.combinations(range(p + 1), 2):
        rest = [X for k, X in enumerate(fields) if k not in (i, j)]
        val = eta(bracket_fields(fields[i], fields[j]), *rest).evaluate_coeffs(xi)
        # (-1)^(i+j) is the same for 0- and 1-based positions
        total = total + val if (i + j) % 2 == 0 else total - val
    return WeilElement(alg, total)


def interior_product(X: VectorFieldA, eta: FormA) -> FormA:
    """i_X eta, contracting the first slot."""
    if eta.degree < 1:
        raise ValueError("interior product needs a form of degree >= 1")
    _same(X, eta)
    alg, n, p = eta.algebra, eta.n, eta.degree
    coeffs = {}
    for J in itertools.combinations(range(1, n + 1), p - 1):
        total: AFunction = LiftedFunction.zero(alg, n)
        for i in range(1, n + 1):
            sign, key = _sort_with_sign((i,) + J)
            if sign == 0 or key not in eta.coeffs:
                continue
            term = X.components[i - 1] * eta.coeffs[key]
            total = total + term if sign > 0 else total - term
        if not (isinstance(total, LiftedFunction) and not total.terms):
            coeffs[J] = total
    return FormA(alg, n, p - 1, coeffs)
