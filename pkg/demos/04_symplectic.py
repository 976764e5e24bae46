"""
Symplectic forms on bundles of near points
==========================================

The Darboux form on R^4 prolongs to an A-valued form.  Hamiltonian fields on
the bundle come from solving a linear system over A, and the resulting
bracket coincides with the prolonged Poisson bracket.  Whether a real-valued
form psi o Omega^A is symplectic depends only on the annihilator of the
maximal ideal and on psi.
"""

import numpy as np

from weilpoisson import LinearForm, build_algebra, lift_function, parse
from weilpoisson.symplectic import (
    SymplecticStructure,
    bracket_omega,
    check_coincidence,
    check_hamlift,
    hamiltonian_field_base,
    hamiltonian_field_lifted,
    scalar_form_test,
    standard_forms,
)
from weilpoisson.sampling import random_near_points

S = SymplecticStructure.canonical(1)
X = hamiltonian_field_base(S, "(x1^2 + x2^2)/2")
print("harmonic oscillator field at (q, p) = (1, 2):", X.at([1.0, 2.0]))

# %%
# Over the dual numbers the lifted Hamiltonian field of the lifted energy is
# the tangent lift of the base field.
D = build_algebra("R[T1]/(T1^2)")
H = lift_function(parse("(x1^2 + x2^2)/2", 2), D, 2)
xi = random_near_points(D, 2, np.random.default_rng(0), 1)
print("X_{H^D}(xi) =", hamiltonian_field_lifted(S, D, H, method="solve").component_values(xi)[0].tolist())
q, p = lift_function(parse("x1", 2), D, 2), lift_function(parse("x2", 2), D, 2)
print("{q^D, p^D} =", bracket_omega(S, D, q, p).evaluate_coeffs(xi)[0])

# %%
# A non-constant form, checked end to end.
curved = SymplecticStructure([[0, "1 + x1^2"], [None, 0]], name="curved")
for spec in ["R[T1]/(T1^2)", "R[T1,T2]/(T1^2,T2^2)"]:
    A = build_algebra(spec)
    print(check_coincidence(curved, A, samples=10, seed=1).line())
    print(check_hamlift(curved, A, samples=5, seed=1).line())

# %%
# The scalar-form criterion, decided twice.
S4 = SymplecticStructure.canonical(2)
rng = np.random.default_rng(5)
for spec in ["R[T1]/(T1^2)", "R[T1]/(T1^3)", "R[T1,T2]/(T1,T2)^2", "R[T1,T2]/(T1^2,T2^2)"]:
    A = build_algebra(spec)
    for label, psi in standard_forms(A, rng).items():
        v = scalar_form_test(S4, A, psi, points=4, seed=rng)
        print(f"{spec:22s} {label:12s} {v.verdict:10s} agree={v.agree}")

print(scalar_form_test(S, D, LinearForm(D, [0.0, 1.0])).line())
