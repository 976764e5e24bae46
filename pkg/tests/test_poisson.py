import json
import re
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weilpoisson import (
    AlgebraMismatch,
    LiftedFunction,
    PoissonStructure,
    build_algebra,
    eval_real,
    extend_derivation,
    lift_function,
    parse,
)
from weilpoisson.poisson import (
    a_bracket,
    bracket_base,
    check_commutator,
    check_compat,
    check_jacobi,
    check_poisson_suite,
    check_skew,
    hamiltonian_derivation,
    tau,
    tau_tilde,
)
from weilpoisson.sampling import random_lifted, random_near_points, random_polynomial, random_smooth

from .conftest import MATRIX_SPECS

D = build_algebra("R[T1]/(T1^2)")
T3 = build_algebra("R[T1]/(T1^3)")
SO3 = PoissonStructure.lie_poisson_so3()
STRUCTURES = {"canonical_R2": PoissonStructure.canonical(2), "canonical_R4": PoissonStructure.canonical(4), "so3": SO3}


def levi_civita():
    eps = np.zeros((3, 3, 3))
    for (i, j, k), s in {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1, (0, 2, 1): -1, (2, 1, 0): -1, (1, 0, 2): -1}.items():
        eps[i, j, k] = s
    return eps


def broken(n=4):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return PoissonStructure(n, {(1, 2): "1 + x3", (3, 4): 1.0}, name="broken")


def close(a, b, tol=1e-9):
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b).max() <= tol * max(1.0, np.abs(b).max())


def test_bracket_base_examples(rng):
    assert eval_real(bracket_base(PoissonStructure.canonical(2), parse("x1", 2), parse("x2", 2)), [0.3, 0.4]) == 1.0
    # so(3)*: expand sum_k eps_12k x_k directly, compare against the stored structure
    eps = levi_civita()
    b = bracket_base(SO3, parse("x1", 3), parse("x2", 3))
    for x in rng.uniform(-2, 2, (10, 3)):
        assert eval_real(b, x) == pytest.approx(eps[0, 1] @ x, abs=1e-15)
        assert np.allclose(SO3.matrix_at(x), np.einsum("ijk,k->ij", eps, x), atol=0)
    f = random_smooth(3, rng)
    assert eval_real(bracket_base(SO3, f, f), [0.1, 0.2, 0.3]) == 0.0


def test_structure_validation():
    with pytest.raises(ValueError):
        PoissonStructure.canonical(3)
    with pytest.raises(ValueError):
        PoissonStructure(2, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        PoissonStructure(2, {(1, 3): 1.0})
    lower = PoissonStructure(2, {(2, 1): 1.0})
    assert eval_real(lower.pi(1, 2), [0, 0]) == -1.0
    assert SO3.is_jacobi and PoissonStructure.canonical(4).is_jacobi


def test_broken_structure_is_flagged():
    with pytest.warns(UserWarning, match="Jacobi"):
        P = PoissonStructure(4, {(1, 2): "1 + x3", (3, 4): 1.0})
    assert not P.is_jacobi and P.jacobi_defect > 1e-3
    assert "FAILS" in repr(P)


def test_hamiltonian_derivation_examples(rng):
    P = PoissonStructure.canonical(2)
    ad = hamiltonian_derivation(P, parse("x1", 2))
    assert [eval_real(c, [0.5, -0.5]) for c in ad.components] == [0.0, 1.0]
    assert eval_real(ad(parse("x2", 2)), [0, 0]) == 1.0
    assert all(eval_real(c, [1.0, 2.0]) == 0.0 for c in hamiltonian_derivation(P, parse("7", 2)).components)


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_ad_is_a_derivation_in_f(name, rng):
    P = STRUCTURES[name]
    f, g, h = (random_smooth(P.n, rng) for _ in range(3))
    lhs = hamiltonian_derivation(P, f * g)
    rhs_f, rhs_g = hamiltonian_derivation(P, g), hamiltonian_derivation(P, f)
    for x in rng.uniform(-1, 1, (10, P.n)):
        expected = eval_real(f, x) * rhs_f.at(x) + eval_real(g, x) * rhs_g.at(x)
        assert np.allclose(lhs.at(x), expected, rtol=1e-10, atol=1e-12)
        assert eval_real(hamiltonian_derivation(P, f)(h), x) == pytest.approx(eval_real(bracket_base(P, f, h), x), rel=1e-10, abs=1e-12)


def test_tau_on_lifts_and_constants(algebra, rng):
    f, g = random_smooth(3, rng), random_smooth(3, rng)
    xi = random_near_points(algebra, 3, rng, 10)
    got = tau_tilde(SO3, lift_function(f, algebra, 3), lift_function(g, algebra, 3)).evaluate_coeffs(xi)
    assert close(got, lift_function(bracket_base(SO3, f, g), algebra, 3).evaluate_coeffs(xi))
    const = LiftedFunction.constant(algebra, 3, algebra.random_element(rng))
    assert not np.any(tau(SO3, const).component_values(xi))


def test_tau_of_a_product(algebra, rng):
    phi, psi = random_lifted(algebra, 3, rng), random_lifted(algebra, 3, rng)
    xi = random_near_points(algebra, 3, rng, 10)
    memo = {}
    lhs = tau(SO3, phi * psi).component_values(xi)
    t_psi, t_phi = tau(SO3, psi).component_values(xi), tau(SO3, phi).component_values(xi)
    a, b = phi.evaluate_coeffs(xi, memo), psi.evaluate_coeffs(xi, memo)
    rhs = algebra.mul_coeffs(a[:, None, :], t_psi) + algebra.mul_coeffs(b[:, None, :], t_phi)
    assert close(lhs, rhs)


def test_tau_rejects_mismatch(rng):
    with pytest.raises(AlgebraMismatch):
        tau(SO3, random_lifted(D, 2, rng))
    with pytest.raises(AlgebraMismatch):
        a_bracket(SO3, random_lifted(D, 3, rng), random_lifted(T3, 3, rng))


def test_a_bracket_examples(algebra, rng):
    P = PoissonStructure.canonical(2)
    one = a_bracket(P, lift_function(parse("x1", 2), D, 2), lift_function(parse("x2", 2), D, 2))
    xi = random_near_points(D, 2, rng, 5)
    assert np.array_equal(one.evaluate_coeffs(xi), D.unit_coeffs((5,)))
    x1, x2, x3 = (lift_function(parse(f"x{i}", 3), algebra, 3) for i in (1, 2, 3))
    xi = random_near_points(algebra, 3, rng, 20)
    assert close(a_bracket(SO3, x1, x2).evaluate_coeffs(xi), x3.evaluate_coeffs(xi))


@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_morphism_and_two_routes(name, algebra, rng):
    P = STRUCTURES[name]
    f, g = random_smooth(P.n, rng), random_smooth(P.n, rng)
    xi = random_near_points(algebra, P.n, rng, 10)
    fa, ga = lift_function(f, algebra, P.n), lift_function(g, algebra, P.n)
    expected = lift_function(bracket_base(P, f, g), algebra, P.n).evaluate_coeffs(xi)
    assert close(a_bracket(P, fa, ga).evaluate_coeffs(xi), expected)
    phi, psi = random_lifted(algebra, P.n, rng), random_lifted(algebra, P.n, rng)
    assert close(
        a_bracket(P, phi, psi).evaluate_coeffs(xi),
        extend_derivation(tau(P, phi), psi).evaluate_coeffs(xi),
    )


def test_bilinearity_at_term_level(algebra, rng):
    phi, psi = random_lifted(algebra, 3, rng), random_lifted(algebra, 3, rng)
    a = algebra.random_element(rng)
    left, right = a_bracket(SO3, phi * a, psi), a_bracket(SO3, phi, psi) * a
    assert [f for _, f in left.terms] == [f for _, f in right.terms]
    for (ca, _), (cb, _) in zip(left.terms, right.terms):
        assert np.allclose(ca, cb, rtol=1e-14, atol=1e-15)
    xi = random_near_points(algebra, 3, rng, 10)
    assert close(left.evaluate_coeffs(xi), right.evaluate_coeffs(xi))


def test_self_bracket_is_exactly_zero(algebra, rng):
    phi = random_lifted(algebra, 3, rng)
    xi = random_near_points(algebra, 3, rng, 10)
    assert np.abs(a_bracket(SO3, phi, phi).evaluate_coeffs(xi)).max() <= 1e-12


def test_casimir_is_central(algebra, rng):
    c = parse("x1^2 + x2^2 + x3^2", 3)
    for k in (1, 2, 3):
        assert abs(eval_real(bracket_base(SO3, c, parse(f"x{k}", 3)), rng.uniform(-1, 1, 3))) < 1e-14
    ca = lift_function(c, algebra, 3)
    xi = random_near_points(algebra, 3, rng, 10)
    for _ in range(3):
        psi = random_lifted(algebra, 3, rng)
        assert np.abs(a_bracket(SO3, ca, psi).evaluate_coeffs(xi)).max() <= 1e-12
    # commutator suite on two Casimir lifts: both sides vanish
    chi = random_lifted(algebra, 3, rng)
    t = tau(SO3, ca * 2.0)
    both = extend_derivation(t, extend_derivation(tau(SO3, ca), chi))
    assert np.abs(both.evaluate_coeffs(xi)).max() <= 1e-10
    assert np.abs(tau_tilde(SO3, a_bracket(SO3, ca, ca * 2.0), chi).evaluate_coeffs(xi)).max() <= 1e-12


def test_canonical_r4_over_t3_suite():
    P = PoissonStructure.canonical(4)
    reports = check_poisson_suite(P, T3, samples=10, seed=1)
    assert [r.name for r in reports] == ["skew", "bilinear", "leibniz", "jacobi", "commutator", "compat"]
    for r in reports:
        assert r.passed, r.line()


@pytest.mark.parametrize("spec", MATRIX_SPECS)
@pytest.mark.parametrize("name", sorted(STRUCTURES))
def test_suite_matrix_smoke(name, spec):
    for r in check_poisson_suite(STRUCTURES[name], build_algebra(spec), samples=3, seed=5):
        assert r.passed, r.line()


def test_negative_control():
    P = broken()
    r = check_jacobi(P, D, samples=10, seed=0)
    assert not r.passed and r.max_defect > 1e-3
    assert r.details["base_jacobi_defect"] > 1e-3
    # the other axioms do not depend on Jacobi and still hold
    assert check_skew(P, D, samples=5, seed=0).passed
    assert check_compat(P, D, samples=5, seed=0).passed
    assert not check_commutator(P, D, samples=10, seed=0).passed


def test_report_format():
    r = check_skew(PoissonStructure.canonical(2), D, samples=2, seed=0)
    assert re.fullmatch(
        r"CHECK skew algebra=\S+ n=2 samples=2 max_defect=\S+ tol=1\.0e-08 PASS", r.line()
    )
    mirror = json.loads(json.dumps(r.to_dict()))
    assert mirror["name"] == "skew" and mirror["passed"] is True and mirror["n"] == 2


def test_suites_are_deterministic():
    a = check_jacobi(SO3, T3, samples=3, seed=9)
    b = check_jacobi(SO3, T3, samples=3, seed=9)
    assert a.max_defect == b.max_defect


@given(st.sampled_from(MATRIX_SPECS), st.integers(0, 2**32 - 1))
def test_jacobi_property(spec, seed):
    alg = build_algebra(spec)
    rng = np.random.default_rng(seed)
    phi, psi, chi = (random_lifted(alg, 3, rng) for _ in range(3))
    xi = random_near_points(alg, 3, rng, 3)
    total = (
        a_bracket(SO3, phi, a_bracket(SO3, psi, chi))
        + a_bracket(SO3, psi, a_bracket(SO3, chi, phi))
        + a_bracket(SO3, chi, a_bracket(SO3, phi, psi))
    )
    assert np.abs(total.evaluate_coeffs(xi)).max() <= 1e-8


@given(st.integers(0, 2**32 - 1))
def test_leibniz_in_base_bracket(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (random_polynomial(3, rng) for _ in range(3))
    x = rng.uniform(-1, 1, 3)
    lhs = eval_real(bracket_base(SO3, f, g * h), x)
    rhs = eval_real(bracket_base(SO3, f, g), x) * eval_real(h, x) + eval_real(g, x) * eval_real(bracket_base(SO3, f, h), x)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)
