"""
The tangent bundle through dual numbers
=======================================

Near points of kind D on R^n are pairs (x, v).  Lifting a function to them
records its value and its derivative along v; lifting a vector field or a
differential form keeps the same shape of formulas one level up.
"""

import numpy as np

from weilpoisson import (
    Form,
    FormA,
    NearPoint,
    VectorFieldBase,
    build_algebra,
    d_A,
    eval_real,
    exterior_derivative,
    lift_form,
    lift_function,
    lift_vector_field,
    parse,
)

D = build_algebra("R[T1]/(T1^2)")
n = 2
f = parse("x1^2*x2 + sin(x2)", n)
x, v = np.array([0.5, -1.0]), np.array([2.0, 1.0])
xi = NearPoint.at(D, x, np.stack([np.zeros(n), v], axis=1))

value, slope = lift_function(f, D, n).evaluate_coeffs(xi)
print(f"f(x) = {value:.6f}, df_x(v) = {slope:.6f}")
print("by hand:", 2 * x[0] * x[1] * v[0] + (x[0] ** 2 + np.cos(x[1])) * v[1])

# %%
# The rotation field x1 d/dx2 - x2 d/dx1 lifted to the tangent bundle acts on
# lifted functions by lifting its own action.
theta = VectorFieldBase([parse("-x2", n), parse("x1", n)])
lifted = lift_vector_field(theta, D)
print("theta^D(f^D) =", lifted.apply(f).evaluate_coeffs(xi))
print("(theta f)^D  =", lift_function(theta(f), D, n).evaluate_coeffs(xi))

# %%
# The angle form is closed but only locally exact.  Its lift stays closed.
angle = Form(n, 1, {(1,): parse("-x2/(x1^2+x2^2)", n), (2,): parse("x1/(x1^2+x2^2)", n)})
print("d(angle) at x:", eval_real(exterior_derivative(angle).coefficient((1, 2)), x))
dd = d_A(lift_form(angle, D))
print("d^D(angle^D) at xi:", dd.coefficient((1, 2)).evaluate_coeffs(xi))

# d^A applied twice to a function vanishes as well.
phi = lift_function(f, D, n) * D.element([1.0, 3.0])
twice = d_A(d_A(FormA(D, n, 0, {(): phi})))
print("d^D d^D phi:", twice.coefficient((1, 2)).evaluate_coeffs(xi))
