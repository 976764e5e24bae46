"""Random inputs for the sampling-based identity suites.

Random lifted-class functions have 2-4 terms; each term pairs an A-coefficient
with entries uniform in [-1, 1] and a sparse polynomial of degree <= 3.
Near points have origins and nilpotent coefficients uniform in [-1, 1].
"""

from __future__ import annotations

import numpy as np

from .algebra import WeilAlgebra
from .expr import ZERO, Call, Const, Expr, NearPoint, Var, add, mul, power
from .lift import LiftedFunction


def random_monomial(n: int, rng: np.random.Generator, max_degree: int = 3) -> Expr:
    degree = int(rng.integers(1, max_degree + 1))
    exps = np.bincount(rng.integers(0, n, size=degree), minlength=n)
    out: Expr = Const(float(rng.uniform(-1.0, 1.0)))
    for i, e in enumerate(exps, start=1):
        if e:
            out = mul(out, power(Var(i), int(e)))
    return out


def random_polynomial(n: int, rng: np.random.Generator, max_degree: int = 3, max_monomials: int = 4) -> Expr:
    out = ZERO
    for _ in range(int(rng.integers(1, max_monomials + 1))):
        out = add(out, random_monomial(n, rng, max_degree))
    return out


def random_smooth(n: int, rng: np.random.Generator) -> Expr:
    """A polynomial, occasionally wrapped in sin, cos or exp."""
    p = random_polynomial(n, rng)
    roll = rng.uniform()
    if roll < 0.2:
        return Call("sin", p)
    if roll < 0.35:
        return Call("exp", mul(Const(0.5), p))
    if roll < 0.5:
        return add(random_polynomial(n, rng, max_degree=2), Call("cos", random_monomial(n, rng, 2)))
    return p


def random_lifted(
    algebra: WeilAlgebra, n: int, rng: np.random.Generator, min_terms: int = 2, max_terms: int = 4
) -> LiftedFunction:
    count = int(rng.integers(min_terms, max_terms + 1))
    terms = [(rng.uniform(-1.0, 1.0, size=algebra.dim), random_polynomial(n, rng)) for _ in range(count)]
    return LiftedFunction(algebra, n, terms)


def random_near_points(
    algebra: WeilAlgebra, n: int, rng: np.random.Generator, count: int, bases=None
) -> NearPoint:
    """``count`` near points; if ``bases`` (list of real n-vectors) is given, origins cycle through it."""
    xi = NearPoint.random(algebra, n, rng, size=count)
    if bases is not None and len(bases):
        bases = np.asarray(bases, dtype=float)
        xi.values[..., 0] = bases[np.arange(count) % len(bases)]
    return xi
