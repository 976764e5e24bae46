"""Poisson structures on R^n and their prolongation to A-Poisson brackets.

For a bivector pi the base bracket is {f, g} = sum_ij pi^ij d_i f d_j g and
ad(f) = {f, .}.  On the lifted class the A-bracket is

    {a f^A, b g^A}_A = (a b) {f, g}^A,

extended A-bilinearly.  The suites below also rebuild the bracket the long
way round, as tau~_phi(psi) with tau_phi(f) = -[ad(f)]^A~(phi), so the closed
form and the derivation route check each other.
"""

from __future__ import annotations

import itertools
import warnings
from typing import Mapping, Sequence

import numpy as np

from .algebra import WeilAlgebra
from .errors import AlgebraMismatch
from .expr import ONE, ZERO, Const, Expr, Var, add, as_expr, eval_real, mul, neg, parse, partial, sub
from .lift import (
    LiftedFunction,
    VectorFieldA,
    VectorFieldBase,
    extend_derivation,
    lift_function,
)
from .report import CheckReport, max_abs
from .sampling import random_lifted, random_near_points, random_smooth

JACOBI_TOL = 1e-9
POINTS_PER_SAMPLE = 4


class PoissonStructure:
    """Skew bivector pi^ij on R^n with expression entries.

    Only the upper triangle is stored.  The base Jacobi identity is checked
    numerically on coordinate triples; a failure is reported through
    ``is_jacobi``/``jacobi_defect`` and a warning rather than an exception,
    so broken structures stay available for negative tests.
    """

    def __init__(self, n: int, bivector: Mapping[tuple[int, int], Expr | str | float], name: str = "poisson"):
        self.n = n
        self.name = name
        upper: dict[tuple[int, int], Expr] = {}
        for (i, j), v in bivector.items():
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"entry ({i}, {j}) outside a {n}x{n} bivector")
            e = parse(v, n) if isinstance(v, str) else as_expr(v)
            if i == j:
                if not (isinstance(e, Const) and e.value == 0.0):
                    raise ValueError("a bivector has zero diagonal")
                continue
            if i > j:
                i, j, e = j, i, neg(e)
            upper[(i, j)] = add(upper[(i, j)], e) if (i, j) in upper else e
        self.upper = {k: v for k, v in upper.items() if not (isinstance(v, Const) and v.value == 0.0)}
        self.jacobi_defect = _base_jacobi_defect(self)
        self.is_jacobi = self.jacobi_defect <= JACOBI_TOL
        if not self.is_jacobi:
            warnings.warn(
                f"bivector {name!r} violates the Jacobi identity (defect {self.jacobi_defect:.3g})",
                stacklevel=2,
            )

    @classmethod
    def from_matrix(cls, matrix: Sequence[Sequence[Expr | str | float | None]], name="poisson") -> PoissonStructure:
        """Build from an n x n table; entries below the diagonal may be None or omitted."""
        n = len(matrix)
        entries = {}
        for i, row in enumerate(matrix, start=1):
            for j, v in enumerate(row, start=1):
                if j > i and v is not None:
                    entries[(i, j)] = v
        return cls(n, entries, name=name)

    @classmethod
    def canonical(cls, n: int) -> PoissonStructure:
        """Canonical structure on R^n (n even) with pairs (x1,x2), (x3,x4), ...: {x_{2k-1}, x_{2k}} = 1."""
        if n % 2:
            raise ValueError("the canonical structure needs an even dimension")
        return cls(n, {(2 * k - 1, 2 * k): ONE for k in range(1, n // 2 + 1)}, name=f"canonical_R{n}")

    @classmethod
    def lie_poisson_so3(cls) -> PoissonStructure:
        """Lie-Poisson structure on so(3)*: pi^ij = sum_k eps_ijk x_k."""
        return cls(3, {(1, 2): Var(3), (2, 3): Var(1), (1, 3): neg(Var(2))}, name="so3")

    def pi(self, i: int, j: int) -> Expr:
        if i == j:
            return ZERO
        if i < j:
            return self.upper.get((i, j), ZERO)
        e = self.upper.get((j, i))
        return ZERO if e is None else neg(e)

    def matrix_at(self, x) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for (i, j), e in self.upper.items():
            v = eval_real(e, x)
            out[i - 1, j - 1] = v
            out[j - 1, i - 1] = -v
        return out

    def __repr__(self):
        return f"PoissonStructure({self.name!r}, n={self.n}, jacobi={'ok' if self.is_jacobi else 'FAILS'})"


def bracket_base(P: PoissonStructure, f: Expr, g: Expr) -> Expr:
    """{f, g} = sum_{i<j} pi^ij (d_i f d_j g - d_j f d_i g)."""
    df = {}
    dg = {}
    out = ZERO
    for (i, j), p in P.upper.items():
        for k in (i, j):
            if k not in df:
                df[k] = partial(f, k)
                dg[k] = partial(g, k)
        term = sub(mul(df[i], dg[j]), mul(df[j], dg[i]))
        out = add(out, mul(p, term))
    return out


def _base_jacobi_defect(P: PoissonStructure, points: int = 16) -> float:
    """Max |{x_i,{x_j,x_k}} + cyclic| over coordinate triples at fixed sample points."""
    if P.n < 3:
        return 0.0
    rng = np.random.default_rng(12345)
    xs = rng.uniform(-1.0, 1.0, size=(points, P.n))
    worst = 0.0
    coords = [Var(i) for i in range(1, P.n + 1)]
    for i, j, k in itertools.combinations(range(P.n), 3):
        a, b, c = coords[i], coords[j], coords[k]
        jac = add(
            add(bracket_base(P, a, bracket_base(P, b, c)), bracket_base(P, b, bracket_base(P, c, a))),
            bracket_base(P, c, bracket_base(P, a, b)),
        )
        for x in xs:
            worst = max(worst, abs(eval_real(jac, x)))
    return worst


def hamiltonian_derivation(P: PoissonStructure, f: Expr) -> VectorFieldBase:
    """ad(f) = {f, .}, with components ad(f)^j = sum_i pi^ij d_i f."""
    grads = [partial(f, i) for i in range(1, P.n + 1)]
    comps = []
    for j in range(1, P.n + 1):
        c = ZERO
        for i in range(1, P.n + 1):
            c = add(c, mul(P.pi(i, j), grads[i - 1]))
        comps.append(c)
    return VectorFieldBase(comps)


def _check_space(P: PoissonStructure, phi: LiftedFunction):
    if phi.n != P.n:
        raise AlgebraMismatch(f"function on R^{phi.n} used with a structure on R^{P.n}")


def tau(P: PoissonStructure, phi: LiftedFunction) -> VectorFieldA:
    """tau_phi: f -> -[ad(f)]^A~(phi), as the field with components tau_phi(x_j).

    For phi = sum a g^A, tau_phi(x_j) = sum a {g, x_j}^A = sum_i a (pi^ij d_i g)^A.
    """
    _check_space(P, phi)
    alg, n = phi.algebra, phi.n
    comps = []
    for j in range(1, n + 1):
        terms = []
        for a, g in phi.terms:
            c = ZERO
            for i in range(1, n + 1):
                c = add(c, mul(P.pi(i, j), partial(g, i)))
            terms.append((a, c))
        comps.append(LiftedFunction(alg, n, terms))
    return VectorFieldA(alg, n, comps)


def tau_tilde(P: PoissonStructure, phi: LiftedFunction, chi: LiftedFunction) -> LiftedFunction:
    """tau~_phi(chi) by literally extending the derivation tau_phi."""
    return extend_derivation(tau(P, phi), chi)


def a_bracket(P: PoissonStructure, phi: LiftedFunction, psi: LiftedFunction) -> LiftedFunction:
    """{phi, psi}_A from the closed-form term rule {a f^A, b g^A}_A = ab {f,g}^A."""
    _check_space(P, phi)
    _check_space(P, psi)
    if phi.algebra != psi.algebra:
        raise AlgebraMismatch(f"{phi.algebra.label} vs {psi.algebra.label}")
    mulc = phi.algebra.mul_coeffs
    terms = [(mulc(a, b), bracket_base(P, f, g)) for a, f in phi.terms for b, g in psi.terms]
    return LiftedFunction(phi.algebra, phi.n, terms)


# -- identity suites --------------------------------------------------------

def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _report(name, P, algebra, samples, defect, tol, **details):
    return CheckReport(name, algebra.label, P.n, samples, defect, tol, bool(defect <= tol), dict(details))


def check_skew(P, algebra: WeilAlgebra, samples=50, tol=1e-8, seed=0, bases=None) -> CheckReport:
    """{phi,psi}_A + {psi,phi}_A and {phi,phi}_A on random lifted-class pairs."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(samples):
        phi, psi = random_lifted(algebra, P.n, rng), random_lifted(algebra, P.n, rng)
        xi = random_near_points(algebra, P.n, rng, POINTS_PER_SAMPLE, bases)
        both = (a_bracket(P, phi, psi) + a_bracket(P, psi, phi)).evaluate_coeffs(xi)
        self_ = a_bracket(P, phi, phi).evaluate_coeffs(xi)
        worst = max(worst, max_abs(both, self_))
    return _report("skew", P, algebra, samples, worst, tol)


def check_bilinear(P, algebra: WeilAlgebra, samples=50, tol=1e-8, seed=0, bases=None) -> CheckReport:
    """A-bilinearity in both slots: {a phi + chi, psi} = a{phi,psi} + {chi,psi}, and symmetrically."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(samples):
        phi, psi, chi = (random_lifted(algebra, P.n, rng) for _ in range(3))
        a = algebra.random_element(rng)
        xi = random_near_points(algebra, P.n, rng, POINTS_PER_SAMPLE, bases)
        left = a_bracket(P, phi * a + chi, psi) - (a_bracket(P, phi, psi) * a + a_bracket(P, chi, psi))
        right = a_bracket(P, psi, phi * a + chi) - (a_bracket(P, psi, phi) * a + a_bracket(P, psi, chi))
        worst = max(worst, max_abs(left.evaluate_coeffs(xi), right.evaluate_coeffs(xi)))
    return _report("bilinear", P, algebra, samples, worst, tol)


def check_leibniz(P, algebra: WeilAlgebra, samples=50, tol=1e-8, seed=0, bases=None) -> CheckReport:
    """{phi, psi1 psi2}_A - {phi,psi1}_A psi2 - psi1 {phi,psi2}_A."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(samples):
        phi, p1, p2 = (random_lifted(algebra, P.n, rng) for _ in range(3))
        xi = random_near_points(algebra, P.n, rng, POINTS_PER_SAMPLE, bases)
        memo = {}
        lhs = a_bracket(P, phi, p1 * p2).evaluate_coeffs(xi, memo)
        rhs = (a_bracket(P, phi, p1) * p2 + p1 * a_bracket(P, phi, p2)).evaluate_coeffs(xi, memo)
        worst = max(worst, max_abs(lhs - rhs))
    return _report("leibniz", P, algebra, samples, worst, tol)


def check_jacobi(P, algebra: WeilAlgebra, samples=50, tol=1e-8, seed=0, bases=None) -> CheckReport:
    """{phi,{psi,chi}_A}_A + cyclic on random lifted-class triples."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(samples):
        phi, psi, chi = (random_lifted(algebra, P.n, rng) for _ in range(3))
        xi = random_near_points(algebra, P.n, rng, POINTS_PER_SAMPLE, bases)
        total = (
            a_bracket(P, phi, a_bracket(P, psi, chi))
            + a_bracket(P, psi, a_bracket(P, chi, phi))
            + a_bracket(P, chi, a_bracket(P, phi, psi))
        )
        worst = max(worst, max_abs(total.evaluate_coeffs(xi)))
    return _report("jacobi", P, algebra, samples, worst, tol, base_jacobi_defect=P.jacobi_defect)


def check_commutator(P, algebra: WeilAlgebra, samples=50, tol=1e-8, seed=0, bases=None) -> CheckReport:
    """[tau~_phi, tau~_psi](chi) - tau~_{phi,psi}_A(chi), all through literal derivations."""
    rng = _rng(seed)
    worst = 0.0
    for _ in range(samples):
        phi, psi, chi = (random_lifted(algebra, P.n, rng) for _ in range(3))
        xi = random_near_points(algebra, P.n, rng, POINTS_PER_SAMPLE, bases)
        t_phi, t_psi = tau(P, phi), tau(P, psi)
        comm = extend_derivation(t_phi, extend_derivation(t_psi, chi)) - extend_derivation(
            t_psi, extend_derivation(t_phi, chi)
        )
        rhs = tau_tilde(P, a_bracket(P, phi, psi), chi)
        worst = max(worst, max_abs((comm - rhs).evaluate_coeffs(xi)))
    return _report("commutator", P, algebra, samples, worst, tol)


def check_compat(P, algebra: WeilAlgebra, samples=50, tol=1e-9, seed=0, bases=None) -> CheckReport:
    """{f^A, g^A}_A = ({f,g})^A, with the left side taken both ways (term rule and tau~)."""
    rng = _rng(seed)
    worst = 0.0
    n = P.n
    for _ in range(samples):
        f, g = random_smooth(n, rng), random_smooth(n, rng)
        xi = random_near_points(algebra, n, rng, POINTS_PER_SAMPLE, bases)
        fa, ga = lift_function(f, algebra, n), lift_function(g, algebra, n)
        expected = lift_function(bracket_base(P, f, g), algebra, n).evaluate_coeffs(xi)
        closed = a_bracket(P, fa, ga).evaluate_coeffs(xi)
        derived = tau_tilde(P, fa, ga).evaluate_coeffs(xi)
        worst = max(worst, max_abs(closed - expected, derived - expected))
    return _report("compat", P, algebra, samples, worst, tol)


def check_poisson_suite(P, algebra, samples=50, tol=1e-8, seed=0, bases=None) -> list[CheckReport]:
    """Every A-Poisson identity for one (structure, algebra) pair, each with its own seed stream."""
    seeds = np.random.SeedSequence(seed).spawn(6)
    rngs = [np.random.default_rng(s) for s in seeds]
    return [
        check_skew(P, algebra, samples, tol, rngs[0], bases),
        check_bilinear(P, algebra, samples, tol, rngs[1], bases),
        check_leibniz(P, algebra, samples, tol, rngs[2], bases),
        check_jacobi(P, algebra, samples, tol, rngs[3], bases),
        check_commutator(P, algebra, samples, tol, rngs[4], bases),
        check_compat(P, algebra, samples, tol, rngs[5], bases),
    ]
