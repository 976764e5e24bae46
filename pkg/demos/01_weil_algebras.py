"""
Weil algebras as truncated polynomial rings
===========================================

A Weil algebra here is R[T1..Ts] modulo a monomial ideal that contains
every high enough power.  Elements are coefficient vectors on the surviving
monomials, so arithmetic is a table lookup.
"""

import numpy as np

from weilpoisson import NearPoint, build_algebra, eval_weil, invert, parse

# The dual numbers: 1 and eps with eps^2 = 0.
D = build_algebra("R[T1]/(T1^2)")
print(D.label, "basis", D.monomial_names(), "height", D.height)

eps = D.gen(1)
print("(2 + 3 eps)(1 - eps) =", (D.element([2, 3]) * D.element([1, -1])).coeffs)
print("eps^2 =", (eps * eps).coeffs)

# Two variables truncated differently give different annihilators of the
# maximal ideal.  The number of them decides whether a scalar form can be
# symplectic later on.
for spec in ["R[T1,T2]/(T1,T2)^2", "R[T1,T2]/(T1^2,T2^2)", "R[T1,T2]/(T1^3,T1*T2,T2^2)"]:
    A = build_algebra(spec)
    names = A.monomial_names()
    print(f"{spec:28s} dim={A.dim} height={A.height} ann(m)={[names[k] for k in A.ann_basis]}")

# %%
# Evaluating a smooth function at x + T over R[T]/(T^4) produces its Taylor
# coefficients up to order three.
A = build_algebra("R[T1]/(T1^4)")
f = parse("exp(x1)*sin(x1)", 1)
x = 0.4
taylor = eval_weil(f, NearPoint.at(A, [x], [[0, 1, 0, 0]])).coeffs
h = 1e-3
print("Taylor coefficients  ", taylor)
print("value at x+h vs series", np.exp(x + h) * np.sin(x + h), taylor @ h ** np.arange(4))

# Units are elements with nonzero real part; inverses come from a finite
# geometric series.
a = A.element([2.0, 1.0, -1.0, 0.5])
print("a * a^-1 =", np.round((a * invert(a)).coeffs, 15))
