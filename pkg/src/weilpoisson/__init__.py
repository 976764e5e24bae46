"""Weil algebras, prolongation to bundles of near points, and A-Poisson brackets."""

from .algebra import (
    AlgebraSpec,
    LinearForm,
    WeilAlgebra,
    WeilElement,
    annihilator_of_m,
    build_algebra,
    compute_height,
    dual_basis,
    invert,
    parse_algebra_spec,
    solve_linear_local,
)
from .errors import (
    AlgebraMismatch,
    AlgebraTooLarge,
    DegenerateAt,
    DomainError,
    InfiniteDimensional,
    NotInvertible,
    SamplingExhausted,
    SingularAugmentation,
    SpecSyntaxError,
    UnknownIdentifier,
    UnrepresentableBracket,
    VariableOutOfRange,
    WeilError,
)
from .expr import Expr, NearPoint, eval_real, eval_weil, expr_equal_numeric, gradient, parse, partial, to_string
from .lift import (
    Form,
    FormA,
    LiftedFunction,
    PointwiseFunction,
    VectorFieldA,
    VectorFieldBase,
    component_extract,
    d_A,
    extend_derivation,
    exterior_derivative,
    interior_product,
    lift_form,
    lift_function,
    lift_vector_field,
)
from .poisson import PoissonStructure, a_bracket, bracket_base, check_poisson_suite, tau, tau_tilde
from .report import CheckReport
from .symplectic import (
    InducedPoisson,
    SymplecticStructure,
    bracket_omega,
    check_coincidence,
    check_hamlift,
    hamiltonian_field_base,
    hamiltonian_field_lifted,
    scalar_form_test,
)

__version__ = "0.1.0"

__all__ = [
    "a_bracket",
    "AlgebraMismatch",
    "AlgebraSpec",
    "AlgebraTooLarge",
    "annihilator_of_m",
    "bracket_base",
    "bracket_omega",
    "build_algebra",
    "check_coincidence",
    "check_hamlift",
    "check_poisson_suite",
    "CheckReport",
    "component_extract",
    "compute_height",
    "d_A",
    "DegenerateAt",
    "DomainError",
    "dual_basis",
    "eval_real",
    "eval_weil",
    "Expr",
    "expr_equal_numeric",
    "extend_derivation",
    "exterior_derivative",
    "Form",
    "FormA",
    "gradient",
    "hamiltonian_field_base",
    "hamiltonian_field_lifted",
    "InducedPoisson",
    "InfiniteDimensional",
    "interior_product",
    "invert",
    "lift_form",
    "lift_function",
    "lift_vector_field",
    "LiftedFunction",
    "LinearForm",
    "NearPoint",
    "NotInvertible",
    "parse",
    "parse_algebra_spec",
    "partial",
    "PointwiseFunction",
    "PoissonStructure",
    "SamplingExhausted",
    "scalar_form_test",
    "SingularAugmentation",
    "solve_linear_local",
    "SpecSyntaxError",
    "SymplecticStructure",
    "tau",
    "tau_tilde",
    "to_string",
    "UnknownIdentifier",
    "UnrepresentableBracket",
    "VariableOutOfRange",
    "VectorFieldA",
    "VectorFieldBase",
    "WeilAlgebra",
    "WeilElement",
    "WeilError",
]
