"""
Prolonging a Lie-Poisson bracket
================================

so(3)* carries the bracket {x1, x2} = x3 and cyclic.  Over a Weil algebra A
the prolonged bracket is A-bilinear and agrees with the lift of the base
bracket on lifted functions.
"""

import warnings

import numpy as np

from weilpoisson import PoissonStructure, a_bracket, build_algebra, check_poisson_suite, lift_function, parse
from weilpoisson.sampling import random_near_points

A = build_algebra("R[T1]/(T1^3)")
P = PoissonStructure.lie_poisson_so3()
rng = np.random.default_rng(1)
xi = random_near_points(A, 3, rng, 1)
x1, x2, x3 = (lift_function(parse(f"x{i}", 3), A, 3) for i in (1, 2, 3))

print("{x1^A, x2^A}_A =", a_bracket(P, x1, x2).evaluate_coeffs(xi)[0])
print("x3^A           =", x3.evaluate_coeffs(xi)[0])

# %%
# The squared radius is a Casimir: it brackets to zero with everything, and
# so does its lift, even against functions with coefficients in A.
casimir = lift_function(parse("x1^2 + x2^2 + x3^2", 3), A, 3)
psi = x1 * A.element([0.0, 1.0, 2.0]) + lift_function(parse("exp(x2)*x3", 3), A, 3)
print("{C^A, psi}_A   =", a_bracket(P, casimir, psi).evaluate_coeffs(xi)[0])

# %%
# Every identity of an A-Poisson manifold, each a random search for a
# counterexample.
for report in check_poisson_suite(P, A, samples=20, seed=3):
    print(report.line())

# A bivector that breaks Jacobi on the base still passes skew-symmetry but
# is caught by the Jacobi suite.
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    broken = PoissonStructure(4, {(1, 2): "1 + x3", (3, 4): 1.0}, name="broken")
for report in check_poisson_suite(broken, A, samples=10, seed=3):
    print(report.line())
