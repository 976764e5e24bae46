"""Symplectic structures, lifted Hamiltonian fields and the Omega^A-bracket.

Conventions.  Omega is stored as the skew matrix Omega_ij = Omega(d_i, d_j),
contraction is on the first slot, (i_X Omega)_j = sum_i X^i Omega_ij, and the
Hamiltonian field of f solves i_{X_f} Omega = df.  The induced bivector is
pi = Omega^{-1}, which makes X_f = ad(f) and {f, g} = X_f(g).  In Darboux form
(Omega_{i,i+n} = 1) this gives {x_i, x_{i+n}} = -1.

Over A the same equation i_X Omega^A = d^A phi is solved pointwise with the
local-algebra solver; at a near point xi the matrix Omega^A(xi) is invertible
iff its augmentation Omega(base) is.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import (
    COND_GUARD,
    LinearForm,
    WeilAlgebra,
    local_matvec,
    solve_local_arrays,
)
from .errors import AlgebraMismatch, DegenerateAt, SingularAugmentation
from .expr import ZERO, Const, Expr, NearPoint, add, as_expr, eval_real, eval_weil_coeffs, mul, neg, parse, partial
from .lift import (
    AFunction,
    Form,
    LiftedFunction,
    PointwiseFunction,
    VectorFieldA,
    VectorFieldBase,
    extend_derivation,
    lift_function,
    lift_vector_field,
)
from .poisson import POINTS_PER_SAMPLE, PoissonStructure, a_bracket
from .report import CheckReport, max_abs
from .sampling import random_lifted, random_near_points, random_smooth

CLOSED_TOL = 1e-9
RANK_TOL = 1e-9
ANN_TOL = 1e-12
WITNESS_POINTS = 16


class SymplecticStructure:
    """Skew 2n x 2n matrix of expressions, checked for closedness and nondegeneracy by sampling.

    Entries below the diagonal may be omitted (None); when given they must be
    the negatives of their mirror entries.
    """

    def __init__(self, matrix: Sequence[Sequence[Expr | str | float | None]], name: str = "symplectic"):
        dim = len(matrix)
        if dim == 0 or dim % 2:
            raise ValueError(f"a symplectic matrix needs even positive size, got {dim}")
        self.dim = dim
        self.name = name
        rows = [list(r) + [None] * (dim - len(r)) for r in matrix]
        if any(len(r) != dim for r in rows):
            raise ValueError("symplectic matrix rows are too long")

        def entry(v):
            if v is None:
                return None
            return parse(v, dim) if isinstance(v, str) else as_expr(v)

        table = [[entry(v) for v in r] for r in rows]
        full: list[list[Expr]] = [[ZERO] * dim for _ in range(dim)]
        for i in range(dim):
            d = table[i][i]
            if d is not None and not (isinstance(d, Const) and d.value == 0.0):
                raise ValueError("a symplectic matrix has zero diagonal")
            for j in range(i + 1, dim):
                up = table[i][j]
                full[i][j] = ZERO if up is None else up
                full[j][i] = neg(full[i][j])
        self.omega = full
        self.constant = all(isinstance(e, Const) for r in full for e in r)

        rng = np.random.default_rng(2024)
        self.witness_points = rng.uniform(-1.0, 1.0, size=(WITNESS_POINTS, dim))
        for i in range(dim):
            for j in range(i):
                given = table[i][j]
                if given is None:
                    continue
                gap = max(abs(eval_real(given, x) + eval_real(full[j][i], x)) for x in self.witness_points)
                if gap > CLOSED_TOL:
                    raise ValueError(f"entry ({i + 1}, {j + 1}) breaks skew-symmetry")

        mats = np.stack([self.matrix_at(x) for x in self.witness_points])
        conds = np.linalg.cond(mats)
        self.nondegenerate = bool(np.all(conds < COND_GUARD))
        if not self.nondegenerate:
            bad = self.witness_points[int(np.argmax(conds))]
            raise DegenerateAt(bad.tolist(), "no nondegeneracy witness: Omega is singular")
        self.closed_defect = self._closed_defect()
        self.closed = self.closed_defect <= CLOSED_TOL
        if not self.closed:
            warnings.warn(f"Omega {name!r} is not closed (defect {self.closed_defect:.3g})", stacklevel=2)

    @classmethod
    def canonical(cls, n: int) -> SymplecticStructure:
        """Darboux form sum_i dx_i ^ dx_{i+n} on R^{2n}."""
        dim = 2 * n
        m: list[list[float | None]] = [[None] * dim for _ in range(dim)]
        for i in range(n):
            m[i][i + n] = 1.0
        return cls(m, name=f"canonical_R{dim}")

    def scaled(self, c: float) -> SymplecticStructure:
        if c == 0:
            raise ValueError("scaling by zero destroys nondegeneracy")
        rows = [[mul(Const(float(c)), e) if j > i else None for j, e in enumerate(r)] for i, r in enumerate(self.omega)]
        return SymplecticStructure(rows, name=f"{c:g}*{self.name}")

    @property
    def witness(self) -> str:
        return f"no degeneracy found at {len(self.witness_points)} samples"

    def _closed_defect(self) -> float:
        worst = 0.0
        for i, j, k in itertools.combinations(range(self.dim), 3):
            o = self.omega
            terms = (
                partial(o[j][k], i + 1),
                partial(o[k][i], j + 1),
                partial(o[i][j], k + 1),
            )
            if all(isinstance(t, Const) and t.value == 0.0 for t in terms):
                continue
            s = add(add(terms[0], terms[1]), terms[2])
            worst = max(worst, max(abs(eval_real(s, x)) for x in self.witness_points))
        return worst

    def matrix_at(self, x) -> np.ndarray:
        out = np.zeros((self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                v = eval_real(self.omega[i][j], x)
                out[i, j] = v
                out[j, i] = -v
        return out

    def lifted_matrix(self, xi: NearPoint) -> np.ndarray:
        """Omega^A(xi) with shape (..., 2n, 2n, r)."""
        if xi.n != self.dim:
            raise AlgebraMismatch(f"near point in (R^{xi.n})^A used with Omega on R^{self.dim}")
        r = xi.algebra.dim
        out = np.zeros(xi.batch_shape + (self.dim, self.dim, r))
        memo = {}
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                e = self.omega[i][j]
                if isinstance(e, Const) and e.value == 0.0:
                    continue
                v = eval_weil_coeffs(e, xi, memo)
                out[..., i, j, :] = v
                out[..., j, i, :] = -v
        return out

    def as_form(self) -> Form:
        return Form(
            self.dim,
            2,
            {(i + 1, j + 1): self.omega[i][j] for i in range(self.dim) for j in range(i + 1, self.dim)},
        )

    def __repr__(self):
        kind = "constant" if self.constant else "variable"
        return f"SymplecticStructure({self.name!r}, dim={self.dim}, {kind}, closed={self.closed})"


class InducedPoisson:
    """The Poisson structure pi = Omega^{-1}.

    For constant Omega, ``poisson`` is a symbolic :class:`PoissonStructure`;
    otherwise it is None and pi is only available pointwise, including its
    prolongation pi^A(xi) = Omega^A(xi)^{-1}.
    """

    def __init__(self, S: SymplecticStructure):
        self.symplectic = S
        self.constant = S.constant
        self.poisson: PoissonStructure | None = None
        if S.constant:
            pi = np.linalg.inv(S.matrix_at(np.zeros(S.dim)))
            entries = {
                (i + 1, j + 1): float(pi[i, j])
                for i in range(S.dim)
                for j in range(i + 1, S.dim)
                if pi[i, j] != 0.0
            }
            self.poisson = PoissonStructure(S.dim, entries, name=f"induced_{S.name}")

    def matrix_at(self, x) -> np.ndarray:
        m = self.symplectic.matrix_at(x)
        if np.linalg.cond(m) > COND_GUARD:
            raise DegenerateAt(np.asarray(x, dtype=float).tolist())
        return np.linalg.inv(m)

    def lifted_matrix(self, xi: NearPoint) -> np.ndarray:
        """pi^A(xi), the inverse of Omega^A(xi) over A, shape (..., 2n, 2n, r)."""
        om = self.symplectic.lifted_matrix(xi)
        N = self.symplectic.dim
        eye = np.zeros((N, N, xi.algebra.dim))
        eye[np.arange(N), np.arange(N), 0] = 1.0
        cols = _solve(self.symplectic, om[..., None, :, :, :], eye, xi)  # (..., k, N, r): column k of the inverse
        return np.swapaxes(cols, -3, -2)

    def bracket_values(self, phi: LiftedFunction, psi: LiftedFunction, xi: NearPoint) -> np.ndarray:
        """{phi, psi}_A(xi) by the term rule, valid for non-constant Omega as well."""
        if self.poisson is not None:
            return a_bracket(self.poisson, phi, psi).evaluate_coeffs(xi)
        alg = xi.algebra
        pi = self.lifted_matrix(xi)
        memo = {}
        out = np.zeros(xi.batch_shape + (alg.dim,))
        grads_psi = [(b, _grad_values(g, xi, memo)) for b, g in psi.terms]
        for a, f in phi.terms:
            df = _grad_values(f, xi, memo)
            pdf = local_matvec(alg, np.swapaxes(pi, -3, -2), df)  # sum_i pi^ij d_i f
            for b, dg in grads_psi:
                val = alg.mul_coeffs(pdf, dg).sum(axis=-2)
                out = out + alg.mul_coeffs(alg.mul_coeffs(a, b), val)
        return out

    def __repr__(self):
        return f"InducedPoisson({self.symplectic.name!r}, {'symbolic' if self.constant else 'pointwise'})"


def _grad_values(f: Expr, xi: NearPoint, memo) -> np.ndarray:
    """((d_1 f)^A(xi), ..., (d_n f)^A(xi)) with shape (..., n, r)."""
    return np.stack([eval_weil_coeffs(partial(f, j), xi, memo) for j in range(1, xi.n + 1)], axis=-2)


def _solve(S: SymplecticStructure, mat: np.ndarray, rhs: np.ndarray, xi: NearPoint) -> np.ndarray:
    try:
        return solve_local_arrays(xi.algebra, mat, rhs)
    except SingularAugmentation:
        base = xi.base.reshape(-1, xi.n)
        worst = max(base, key=lambda b: np.linalg.cond(S.matrix_at(b)))
        raise DegenerateAt(worst.tolist(), "Omega^A is degenerate (singular augmentation)") from None


@dataclass
class NumericFieldBase:
    """Vector field on R^n known only through its values."""

    n: int
    fn: Callable[[np.ndarray], np.ndarray]

    def at(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float))


def hamiltonian_field_base(S: SymplecticStructure, f: Expr | str) -> VectorFieldBase | NumericFieldBase:
    """X_f with i_{X_f} Omega = df: symbolic for constant Omega, numeric per point otherwise."""
    f = parse(f, S.dim) if isinstance(f, str) else as_expr(f)
    grads = [partial(f, i) for i in range(1, S.dim + 1)]
    if S.constant:
        pi = np.linalg.inv(S.matrix_at(np.zeros(S.dim)))
        comps = []
        for j in range(S.dim):
            c = ZERO
            for i in range(S.dim):
                if pi[i, j] != 0.0:
                    c = add(c, mul(Const(float(pi[i, j])), grads[i]))
            comps.append(c)
        return VectorFieldBase(comps)

    def values(x: np.ndarray) -> np.ndarray:
        m = S.matrix_at(x)
        if np.linalg.cond(m) > COND_GUARD:
            raise DegenerateAt(x.tolist())
        return np.linalg.solve(m.T, np.array([eval_real(g, x) for g in grads]))

    return NumericFieldBase(S.dim, values)


def _check_fn(S: SymplecticStructure, A: WeilAlgebra, phi: LiftedFunction):
    if phi.n != S.dim or phi.algebra != A:
        raise AlgebraMismatch(f"function on ({phi.algebra.label}, n={phi.n}) vs ({A.label}, n={S.dim})")


def hamiltonian_field_lifted(
    S: SymplecticStructure, A: WeilAlgebra, phi: LiftedFunction, method: str = "auto"
) -> VectorFieldA:
    """X_phi on (R^{2n})^A with i_{X_phi} Omega^A = d^A phi.

    ``method`` is "solve" (local linear solve at each point), "symbolic"
    (closed form, constant Omega only) or "auto" (symbolic when possible).
    """
    _check_fn(S, A, phi)
    if method not in ("auto", "solve", "symbolic"):
        raise ValueError(f"unknown method {method!r}")
    if method == "symbolic" and not S.constant:
        raise ValueError("the symbolic path needs a constant-coefficient Omega")
    N = S.dim
    if method == "symbolic" or (method == "auto" and S.constant):
        pi = np.linalg.inv(S.matrix_at(np.zeros(N)))
        comps = []
        for j in range(N):
            terms = []
            for a, f in phi.terms:
                c = ZERO
                for i in range(N):
                    if pi[i, j] != 0.0:
                        c = add(c, mul(Const(float(pi[i, j])), partial(f, i + 1)))
                terms.append((a, c))
            comps.append(LiftedFunction(A, N, terms))
        return VectorFieldA(A, N, comps)

    grads = [(a, [partial(f, j) for j in range(1, N + 1)]) for a, f in phi.terms]

    def values(xi: NearPoint) -> np.ndarray:
        memo = {}
        rhs = np.zeros(xi.batch_shape + (N, A.dim))
        for a, dfs in grads:
            dphi = np.stack([eval_weil_coeffs(d, xi, memo) for d in dfs], axis=-2)
            rhs = rhs + A.mul_coeffs(a, dphi)
        mat = np.swapaxes(S.lifted_matrix(xi), -3, -2)  # transpose: first-slot contraction
        return _solve(S, mat, rhs, xi)

    return VectorFieldA.from_values(A, N, values)


def omega_pairing(S: SymplecticStructure, X: np.ndarray, Y: np.ndarray, xi: NearPoint) -> np.ndarray:
    """Omega^A(X, Y)(xi) = sum_ij X^i Omega_ij^A Y^j for component arrays (..., 2n, r)."""
    alg = xi.algebra
    return alg.mul_coeffs(X, local_matvec(alg, S.lifted_matrix(xi), Y)).sum(axis=-2)


def bracket_omega(
    S: SymplecticStructure, A: WeilAlgebra, phi: LiftedFunction, psi: LiftedFunction, path: str = "form"
) -> AFunction:
    """{phi, psi}_{Omega^A}, either as -Omega^A(X_phi, X_psi) ("form") or X~_phi(psi) ("derivation").

    Hamiltonian fields are always obtained by the local linear solve here, so
    neither path borrows from the induced Poisson structure.
    """
    _check_fn(S, A, phi)
    _check_fn(S, A, psi)
    X_phi = hamiltonian_field_lifted(S, A, phi, method="solve")
    if path == "derivation":
        return extend_derivation(X_phi, psi)
    if path != "form":
        raise ValueError(f"unknown path {path!r}")
    X_psi = hamiltonian_field_lifted(S, A, psi, method="solve")

    def value(xi: NearPoint) -> np.ndarray:
        return -omega_pairing(S, X_phi.component_values(xi), X_psi.component_values(xi), xi)

    return PointwiseFunction(A, S.dim, value)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def check_coincidence(
    S: SymplecticStructure, A: WeilAlgebra, samples: int = 50, tol: float = 1e-8, seed=0, bases=None
) -> CheckReport:
    """{phi,psi}_{Omega^A} (both paths) against the A-bracket of the induced Poisson structure."""
    rng = _rng(seed)
    induced = InducedPoisson(S)
    N = S.dim
    worst_form = worst_der = 0.0
    for _ in range(samples):
        phi, psi = random_lifted(A, N, rng), random_lifted(A, N, rng)
        xi = random_near_points(A, N, rng, POINTS_PER_SAMPLE, bases)
        expected = induced.bracket_values(phi, psi, xi)
        form = bracket_omega(S, A, phi, psi, "form").evaluate_coeffs(xi)
        der = bracket_omega(S, A, phi, psi, "derivation").evaluate_coeffs(xi)
        worst_form = max(worst_form, max_abs(form - expected))
        worst_der = max(worst_der, max_abs(der - expected))
    worst = max(worst_form, worst_der)
    return CheckReport(
        "coincide", A.label, N, samples, worst, tol, bool(worst <= tol),
        {"form_path_defect": worst_form, "derivation_path_defect": worst_der, "witness": S.witness},
    )


def check_hamlift(
    S: SymplecticStructure, A: WeilAlgebra, samples: int = 20, tol: float = 1e-9, seed=0, bases=None
) -> CheckReport:
    """X_{f^A} from the local solve against the prolongation (X_f)^A, one near point per sample.

    For constant Omega the oracle lifts the symbolic X_f.  Otherwise it
    multiplies (df)^A by pi^A(xi) taken from the real regular representation
    of Omega^A(xi), an independent route to the same inverse.
    """
    rng = _rng(seed)
    N = S.dim
    worst = 0.0
    for _ in range(samples):
        f = random_smooth(N, rng)
        xi = random_near_points(A, N, rng, 1, bases)
        solved = hamiltonian_field_lifted(S, A, lift_function(f, A, N), method="solve").component_values(xi)
        if S.constant:
            oracle = lift_vector_field(hamiltonian_field_base(S, f), A).component_values(xi)
        else:
            oracle = _regular_rep_field(S, A, f, xi)
        worst = max(worst, max_abs(solved - oracle))
    return CheckReport("hamlift", A.label, N, samples, worst, tol, bool(worst <= tol), {"witness": S.witness})


def _regular_rep_field(S: SymplecticStructure, A: WeilAlgebra, f: Expr, xi: NearPoint) -> np.ndarray:
    N, r = S.dim, A.dim
    omt = np.swapaxes(S.lifted_matrix(xi), -3, -2)
    big = np.swapaxes(A.mul_matrix(omt), -3, -2)  # (..., N, r, N, r)
    big = big.reshape(xi.batch_shape + (N * r, N * r))
    rhs = _grad_values(f, xi, {}).reshape(xi.batch_shape + (N * r,))
    return np.linalg.solve(big, rhs[..., None])[..., 0].reshape(xi.batch_shape + (N, r))


# -- the scalar-form criterion ----------------------------------------------

@dataclass
class ScalarFormVerdict:
    """Outcome of both nondegeneracy tests for psi o Omega^A."""

    algebra: str
    verdict: str
    predicate_symplectic: bool
    rank_symplectic: bool
    ann_dim: int
    psi_on_ann: list[float]
    ranks: list[int]
    size: int
    points: int
    details: dict = field(default_factory=dict)

    @property
    def agree(self) -> bool:
        return self.predicate_symplectic == self.rank_symplectic

    def line(self) -> str:
        return (
            f"CHECK nondegen algebra={self.algebra} ann_dim={self.ann_dim} "
            f"predicate={'symplectic' if self.predicate_symplectic else 'degenerate'} "
            f"rank={'symplectic' if self.rank_symplectic else 'degenerate'} "
            f"min_rank={min(self.ranks)}/{self.size} {'PASS' if self.agree else 'FAIL'}"
        )

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items()}
        out["agree"] = self.agree
        return out


def frobenius_matrix(A: WeilAlgebra, psi: LinearForm) -> np.ndarray:
    """G[a, b] = psi(e_a e_b) on the monomial basis."""
    if psi.algebra != A:
        raise AlgebraMismatch(f"{psi.algebra.label} vs {A.label}")
    p = np.asarray(psi.coeffs, dtype=float)
    table = A.table
    return np.where(table >= 0, p[np.maximum(table, 0)], 0.0)


def form_matrix(
    S: SymplecticStructure, A: WeilAlgebra, psi: LinearForm, xi: NearPoint, change: np.ndarray | None = None
) -> np.ndarray:
    """Real matrix of psi o Omega^A at xi in the coordinates (i, alpha) of A^{2n}.

    B[(i,a),(j,b)] = psi(e_a e_b Omega_ij^A(xi)).  ``change`` (r x r, invertible)
    re-expresses each copy of A in another real basis.
    """
    N, r = S.dim, A.dim
    G = frobenius_matrix(A, psi)
    M = A.mul_matrix(S.lifted_matrix(xi))  # (..., N, N, r, r)
    B = np.einsum("ag,...ijgb->...iajb", G, M).reshape(xi.batch_shape + (N * r, N * r))
    if change is not None:
        Q = np.kron(np.eye(N), np.asarray(change, dtype=float))
        B = Q.T @ B @ Q
    return B


def numerical_rank(B: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    s = np.linalg.svd(B, compute_uv=False)
    top = s[..., :1]
    return np.sum(s > tol * np.where(top > 0, top, 1.0), axis=-1)


def scalar_form_test(
    S: SymplecticStructure,
    A: WeilAlgebra,
    psi: LinearForm,
    points: int = 8,
    seed=0,
    bases=None,
    change: np.ndarray | None = None,
) -> ScalarFormVerdict:
    """Is psi o Omega^A symplectic?  Decided by the ann(m) predicate and, independently, by rank."""
    if psi.algebra != A:
        raise AlgebraMismatch(f"{psi.algebra.label} vs {A.label}")
    p = np.asarray(psi.coeffs, dtype=float)
    ann = list(A.ann_basis)
    psi_ann = [float(p[k]) for k in ann]
    predicate = len(ann) == 1 and abs(psi_ann[0]) > ANN_TOL
    xi = random_near_points(A, S.dim, _rng(seed), points, bases)
    ranks = numerical_rank(form_matrix(S, A, psi, xi, change))
    size = S.dim * A.dim
    rank_ok = bool(np.all(ranks == size))
    return ScalarFormVerdict(
        algebra=A.label,
        verdict="symplectic" if rank_ok else "degenerate",
        predicate_symplectic=predicate,
        rank_symplectic=rank_ok,
        ann_dim=len(ann),
        psi_on_ann=psi_ann,
        ranks=[int(k) for k in ranks],
        size=size,
        points=points,
    )


def standard_forms(A: WeilAlgebra, rng: np.random.Generator) -> dict[str, LinearForm]:
    """The top dual-basis form, the augmentation form, and a random form."""
    top = np.zeros(A.dim)
    top[-1] = 1.0
    aug = np.zeros(A.dim)
    aug[0] = 1.0
    return {
        "top": LinearForm(A, top),
        "augmentation": LinearForm(A, aug),
        "random": LinearForm(A, rng.uniform(-1.0, 1.0, size=A.dim)),
    }
