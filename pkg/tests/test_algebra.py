import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from weilpoisson import (
    AlgebraMismatch,
    AlgebraSpec,
    AlgebraTooLarge,
    InfiniteDimensional,
    NotInvertible,
    SingularAugmentation,
    SpecSyntaxError,
    annihilator_of_m,
    build_algebra,
    compute_height,
    dual_basis,
    invert,
    parse_algebra_spec,
    solve_linear_local,
)
from weilpoisson.algebra import LinearForm, augmentation, eval_form, mul, nilpotent_part

from .conftest import MATRIX_SPECS


def brute_height(alg):
    """Smallest h with m^(h+1) = 0, by repeatedly multiplying the span of m by m."""
    if alg.dim == 1:
        return 0
    m_basis = np.eye(alg.dim)[1:]
    power = m_basis  # a basis of m^(h) after h steps, starting from m^1
    h = 0
    while len(power):
        h += 1
        prods = alg.mul_coeffs(power[:, None, :], m_basis[None, :, :]).reshape(-1, alg.dim)
        _, sv, vt = np.linalg.svd(prods, full_matrices=False)
        power = vt[sv > 1e-9]
    return h


def brute_ann_dim(alg):
    """dim of {a : a*b = 0 for all b in m} from a dense null space."""
    if alg.dim == 1:
        return 1
    rows = []
    for b in range(1, alg.dim):
        eb = alg.basis_element(b).coeffs
        rows.append(np.stack([alg.mul_coeffs(alg.basis_element(a).coeffs, eb) for a in range(alg.dim)], axis=1))
    big = np.vstack(rows)
    return alg.dim - np.linalg.matrix_rank(big)


# frozen from brute_height / brute_ann_dim
TABULATED = {
    "R[T1]/(T1^2)": (2, 1, 1),
    "R[T1]/(T1^3)": (3, 2, 1),
    "R[T1,T2]/(T1,T2)^2": (3, 1, 2),
    "R[T1,T2]/(T1^2,T2^2)": (4, 2, 1),
}


@pytest.mark.parametrize("spec", MATRIX_SPECS)
def test_tabulated_invariants(spec):
    alg = build_algebra(spec)
    dim, height, ann = TABULATED[spec]
    assert (alg.dim, alg.height, len(alg.ann_basis)) == (dim, height, ann)
    assert brute_height(alg) == height
    assert brute_ann_dim(alg) == ann


def test_constructor_examples():
    d = build_algebra(AlgebraSpec.truncated_powers([2]))
    assert d.dim == 2 and d.monomial_names() == ["1", "T1"] and d.height == 1
    sq = build_algebra(AlgebraSpec.power_ideal(2, 2))
    assert sq.monomial_names() == ["1", "T1", "T2"]
    assert (np.asarray(sq.table)[1:, 1:] == -1).all()
    four = build_algebra(AlgebraSpec.truncated_powers([2, 2]))
    assert four.monomial_names() == ["1", "T1", "T2", "T1*T2"] and four.height == 2


def test_trivial_algebra():
    r = build_algebra("R")
    assert (r.dim, r.height) == (1, 0)
    assert build_algebra(AlgebraSpec.truncated_powers([])).dim == 1


@pytest.mark.parametrize("orders", [(2,), (3,), (4,), (2, 2), (2, 3), (3, 4), (2, 2, 2), (4, 2, 3), (4, 4, 4)])
def test_height_of_truncated_powers(orders):
    alg = build_algebra(AlgebraSpec.truncated_powers(list(orders)))
    assert compute_height(alg) == sum(k - 1 for k in orders) == brute_height(alg)
    assert alg.dim == int(np.prod(orders))


@pytest.mark.parametrize("s,k", [(1, 2), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_height_of_power_ideals(s, k):
    alg = build_algebra(AlgebraSpec.power_ideal(s, k))
    assert compute_height(alg) == k - 1 == brute_height(alg)
    assert brute_ann_dim(alg) == len(alg.ann_basis)


def test_annihilator_examples():
    names = lambda spec: [build_algebra(spec).monomial_names()[e.coeffs.argmax()] for e in annihilator_of_m(build_algebra(spec))]
    assert names("R[T1]/(T1^2)") == ["T1"]
    assert names("R[T1]/(T1^3)") == ["T1^2"]
    assert names("R[T1,T2]/(T1,T2)^2") == ["T1", "T2"]


def test_annihilator_kills_m(algebra):
    for a in annihilator_of_m(algebra):
        for b in range(1, algebra.dim):
            assert not np.any((a * algebra.basis_element(b)).coeffs)


def test_basis_order():
    alg = build_algebra("R[T1,T2]/(T1^3,T2^3)")
    assert alg.monomial_names() == ["1", "T1", "T2", "T1^2", "T1*T2", "T2^2", "T1^2*T2", "T1*T2^2", "T1^2*T2^2"]


def test_monomial_ideal_generators():
    alg = build_algebra(AlgebraSpec.monomial_ideal(2, [(2, 0), (1, 1), (0, 3)]))
    assert alg.monomial_names() == ["1", "T1", "T2", "T2^2"]
    with pytest.raises(InfiniteDimensional):
        build_algebra(AlgebraSpec.monomial_ideal(2, [(2, 0), (1, 1)]))


def test_dimension_cap():
    with pytest.raises(AlgebraTooLarge):
        build_algebra(AlgebraSpec.truncated_powers([2] * 11))
    assert build_algebra(AlgebraSpec.truncated_powers([2] * 10)).dim == 1024


@pytest.mark.parametrize("spec", MATRIX_SPECS)
def test_structure_table_exhaustive(spec):
    alg = build_algebra(spec)
    e = [alg.basis_element(i) for i in range(alg.dim)]
    for a, b in itertools.product(e, repeat=2):
        assert np.array_equal((a * b).coeffs, (b * a).coeffs)
    for a, b, c in itertools.product(e, repeat=3):
        assert np.array_equal(((a * b) * c).coeffs, (a * (b * c)).coeffs)


def test_dual_number_products():
    d = build_algebra("R[T1]/(T1^2)")
    x = d.element([1.0, 2.0]) * d.element([3.0, 1.0])
    assert x.coeffs.tolist() == [3.0, 7.0]
    t = build_algebra("R[T1]/(T1^3)").gen(1)
    assert (t * t).coeffs.tolist() == [0.0, 0.0, 1.0]
    assert not np.any((t * t * t).coeffs)


def test_split_examples():
    d = build_algebra("R[T1]/(T1^2)")
    x = d.element([3.0, 7.0])
    assert augmentation(x) == 3.0 and nilpotent_part(x).coeffs.tolist() == [0.0, 7.0]
    assert augmentation(d.unit()) == 1.0 and not nilpotent_part(d.unit()).coeffs.any()
    assert augmentation(d.zero()) == 0.0


def test_mismatch():
    a, b = build_algebra("R[T1]/(T1^2)"), build_algebra("R[T1]/(T1^3)")
    with pytest.raises(AlgebraMismatch):
        mul(a.unit(), b.unit())
    with pytest.raises(AlgebraMismatch):
        eval_form(dual_basis(a)[0], b.unit())


def test_inverse_examples():
    d = build_algebra("R[T1]/(T1^2)")
    assert invert(d.element([1.0, 1.0])).coeffs.tolist() == [1.0, -1.0]
    t3 = build_algebra("R[T1]/(T1^3)")
    assert np.allclose(invert(t3.element([2.0, 1.0, 0.0])).coeffs, [0.5, -0.25, 0.125], atol=0, rtol=1e-15)
    with pytest.raises(NotInvertible):
        invert(d.element([0.0, 1.0]))


def test_random_properties(algebra, rng):
    x = algebra.random_element(rng, 100)
    assert np.allclose((x * algebra.unit()).coeffs, x.coeffs, atol=0)
    n = algebra.random_element(rng, 100, nilpotent=True)
    assert not np.any((n ** (algebra.height + 1)).coeffs)
    y = algebra.random_element(rng, 100)
    y.coeffs[:, 0] = np.sign(y.coeffs[:, 0]) * (0.1 + np.abs(y.coeffs[:, 0]))
    assert np.abs((y * invert(y)).coeffs - algebra.unit_coeffs()).max() <= 1e-12


coeff = st.floats(-10, 10, allow_nan=False)


@given(st.sampled_from(MATRIX_SPECS), st.data())
def test_ring_axioms(spec, data):
    alg = build_algebra(spec)
    vec = st.lists(coeff, min_size=alg.dim, max_size=alg.dim)
    x, y, z = (alg.element(data.draw(vec)) for _ in range(3))
    scale = 1.0 + max(np.abs(v.coeffs).max() for v in (x, y, z)) ** 3
    assert np.allclose((x * (y + z)).coeffs, (x * y + x * z).coeffs, atol=1e-12 * scale)
    assert np.allclose(((x * y) * z).coeffs, (x * (y * z)).coeffs, atol=1e-12 * scale)
    assert np.allclose((x * y).coeffs, (y * x).coeffs, atol=1e-13 * scale)


def test_solver_identity(algebra, rng):
    b = [algebra.random_element(rng) for _ in range(3)]
    eye = [[algebra.scalar(1.0 if i == j else 0.0) for j in range(3)] for i in range(3)]
    for got, want in zip(solve_linear_local(eye, b), b):
        assert np.allclose(got.coeffs, want.coeffs, atol=0)


def test_solver_neumann_series(algebra, rng):
    size = 3
    N = [[algebra.random_element(rng, nilpotent=True) if j > i else algebra.zero() for j in range(size)] for i in range(size)]
    M = [[N[i][j] + (1.0 if i == j else 0.0) for j in range(size)] for i in range(size)]
    b = [algebra.random_element(rng) for _ in range(size)]
    # x = sum_k (-N)^k b, which terminates after size + height terms
    x = list(b)
    term = list(b)
    for _ in range(size * (algebra.height + 1)):
        term = [-sum((N[i][j] * term[j] for j in range(size)), algebra.zero()) for i in range(size)]
        x = [xi + ti for xi, ti in zip(x, term)]
    for got, want in zip(solve_linear_local(M, b), x):
        assert np.allclose(got.coeffs, want.coeffs, atol=1e-12)


def test_solver_residual_random(rng):
    alg = build_algebra("R[T1]/(T1^3)")
    for _ in range(20):
        M = [[alg.random_element(rng) for _ in range(4)] for _ in range(4)]
        for i in range(4):
            M[i][i] = M[i][i] + 3.0
        b = [alg.random_element(rng) for _ in range(4)]
        x = solve_linear_local(M, b)
        for i in range(4):
            res = sum((M[i][j] * x[j] for j in range(4)), alg.zero()) - b[i]
            assert np.abs(res.coeffs).max() <= 1e-9


def test_solver_singular():
    d = build_algebra("R[T1]/(T1^2)")
    M = [[d.element([1.0, 1.0]), d.element([1.0, 0.0])], [d.element([1.0, 0.0]), d.element([1.0, 2.0])]]
    with pytest.raises(SingularAugmentation):
        solve_linear_local(M, [d.unit(), d.unit()])


def test_linear_forms():
    d = build_algebra("R[T1]/(T1^2)")
    a0, a1 = dual_basis(d)
    x = d.element([3.0, 7.0])
    assert a0(x) == 3.0 and a1(x) == 7.0
    assert LinearForm(d, np.ones(2))(d.element([1.0, 1.0])) == 2.0


@pytest.mark.parametrize(
    "text,label",
    [
        ("R", "R"),
        ("R[T1]/(T1^2)", "R[T1]/(T1^2)"),
        (" R [ T1 , T2 ] / ( T1 , T2 ) ^ 2 ", "R[T1,T2]/(T1,T2)^2"),
        ("R[T1,T2]/(T1^2,T2^3)", "R[T1,T2]/(T1^2,T2^3)"),
    ],
)
def test_parse_spec(text, label):
    assert parse_algebra_spec(text).label == label
    assert build_algebra(text).label == label


@pytest.mark.parametrize("text", ["R[T1]/(T1^", "R[T2]/(T2^2)", "Q[T1]/(T1^2)", "R[T1]/(T1^2", "R[T1,T1]/(T1^2)"])
def test_parse_spec_errors(text):
    with pytest.raises(SpecSyntaxError) as info:
        parse_algebra_spec(text)
    assert isinstance(info.value.position, int)
