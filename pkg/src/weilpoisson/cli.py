"""Manifest-driven command line: algebra-info, lift, bracket, check.

Exit codes: 0 when every requested check is consistent, 1 when a defect
exceeds its tolerance or the two nondegeneracy paths disagree, 2 on usage or
parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import WeilAlgebra, build_algebra
from .errors import DegenerateAt, DomainError, SpecSyntaxError, WeilError
from .expr import Expr, NearPoint, eval_weil_coeffs, parse
from .lift import lift_function
from .poisson import (
    PoissonStructure,
    a_bracket,
    check_bilinear,
    check_commutator,
    check_compat,
    check_jacobi,
    check_leibniz,
    check_skew,
)
from .symplectic import (
    SymplecticStructure,
    bracket_omega,
    check_coincidence,
    check_hamlift,
    scalar_form_test,
    standard_forms,
)

POISSON_SUITES = ("skew", "leibniz", "jacobi", "commutator", "compat")
SYMPLECTIC_SUITES = ("coincide", "hamlift", "nondegen")
SUITES = POISSON_SUITES + SYMPLECTIC_SUITES + ("all",)


class UsageError(Exception):
    """Bad manifest or arguments; maps to exit code 2."""


@dataclass
class Manifest:
    algebra: str
    dimension: int
    functions: dict[str, str] = field(default_factory=dict)
    poisson: list | None = None
    symplectic: list | None = None
    points: list | None = None
    seed: int = 0
    tol: float = 1e-8
    samples: int = 50

    @classmethod
    def from_dict(cls, data: dict) -> Manifest:
        if not isinstance(data, dict):
            raise UsageError("manifest must be a JSON object")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown manifest fields: {', '.join(sorted(unknown))}")
        for key in ("algebra", "dimension"):
            if key not in data:
                raise UsageError(f"manifest lacks {key!r}")
        m = cls(**data)
        if not isinstance(m.dimension, int) or m.dimension < 1:
            raise UsageError("dimension must be a positive integer")
        return m

    @classmethod
    def load(cls, path: str | Path) -> Manifest:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read manifest: {exc}") from None
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise UsageError(f"manifest is not valid JSON: {exc}") from None

    def build_algebra(self) -> WeilAlgebra:
        return build_algebra(self.algebra)

    def function(self, name: str) -> Expr:
        src = self.functions.get(name, name)
        return parse(src, self.dimension)

    def poisson_structure(self) -> PoissonStructure | None:
        if self.poisson is None:
            return None
        _square(self.poisson, self.dimension, "poisson")
        return PoissonStructure.from_matrix(self.poisson, name="manifest")

    def symplectic_structure(self) -> SymplecticStructure | None:
        if self.symplectic is None:
            return None
        _square(self.symplectic, self.dimension, "symplectic")
        return SymplecticStructure(self.symplectic, name="manifest")

    def bases(self):
        if not self.points:
            return None
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dimension:
            raise UsageError(f"points must be a list of {self.dimension}-vectors")
        return pts


def _square(matrix, n: int, what: str):
    if len(matrix) != n or any(len(row) > n for row in matrix):
        raise UsageError(f"{what} matrix must be {n} x {n}")


def _near_point(text: str, algebra: WeilAlgebra, n: int) -> NearPoint:
    try:
        values = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise UsageError(f"near point must be a JSON array of arrays: {exc}") from None
    if values.shape != (n, algebra.dim):
        raise UsageError(f"near point needs shape ({n}, {algebra.dim}), got {values.shape}")
    return NearPoint(algebra, values)


def _floats(a) -> list[float]:
    return [float(v) for v in np.asarray(a).ravel()]


def cmd_algebra_info(m: Manifest, args) -> tuple[int, dict]:
    alg = build_algebra(args.spec) if args.spec else m.build_algebra()
    names = alg.monomial_names()
    info = {
        "command": "algebra-info",
        "algebra": alg.label,
        "dim": alg.dim,
        "basis": names,
        "height": alg.height,
        "ann_basis": [names[k] for k in alg.ann_basis],
        "ann_dim": len(alg.ann_basis),
    }
    print(f"algebra {alg.label}")
    print(f"dim     {alg.dim}")
    print(f"basis   {' '.join(names)}")
    print(f"height  {alg.height}")
    print(f"ann(m)  {' '.join(info['ann_basis'])} (dim {info['ann_dim']})")
    return 0, info


def cmd_lift(m: Manifest, args) -> tuple[int, dict]:
    alg = m.build_algebra()
    f = m.function(args.function)
    xi = _near_point(args.point, alg, m.dimension)
    coeffs = _floats(eval_weil_coeffs(f, xi))
    print(" ".join(repr(c) for c in coeffs))
    return 0, {"command": "lift", "algebra": alg.label, "function": args.function, "coefficients": coeffs}


def cmd_bracket(m: Manifest, args) -> tuple[int, dict]:
    alg = m.build_algebra()
    n = m.dimension
    f, g = m.function(args.f), m.function(args.g)
    xi = _near_point(args.point, alg, n)
    fa, ga = lift_function(f, alg, n), lift_function(g, alg, n)
    P = m.poisson_structure()
    if P is not None and args.structure in ("auto", "poisson"):
        value = a_bracket(P, fa, ga).evaluate_coeffs(xi)
        used = "poisson"
    else:
        S = m.symplectic_structure()
        if S is None:
            raise UsageError("bracket needs a poisson or symplectic structure in the manifest")
        value = bracket_omega(S, alg, fa, ga).evaluate_coeffs(xi)
        used = "symplectic"
    coeffs = _floats(value)
    print(" ".join(repr(c) for c in coeffs))
    return 0, {"command": "bracket", "algebra": alg.label, "structure": used, "coefficients": coeffs}


def cmd_check(m: Manifest, args) -> tuple[int, dict]:
    suite = args.suite
    alg = m.build_algebra()
    P = m.poisson_structure()
    S = m.symplectic_structure()
    bases = m.bases()
    if suite == "all":
        wanted = []
        if P is not None:
            wanted += ["skew", "bilinear", "leibniz", "jacobi", "commutator", "compat"]
        if S is not None:
            wanted += list(SYMPLECTIC_SUITES)
        if not wanted:
            raise UsageError("check all needs a poisson or symplectic structure")
    elif suite in POISSON_SUITES and P is None:
        raise UsageError(f"suite {suite!r} needs a poisson structure")
    elif suite in SYMPLECTIC_SUITES and S is None:
        raise UsageError(f"suite {suite!r} needs a symplectic structure")
    else:
        wanted = [suite]

    # one independent stream per suite, so a suite's result does not depend on what else ran
    names = POISSON_SUITES + SYMPLECTIC_SUITES + ("bilinear",)
    rng_for = {
        name: np.random.default_rng(ss) for name, ss in zip(names, np.random.SeedSequence(m.seed).spawn(len(names)))
    }
    poisson_fns = {
        "skew": check_skew,
        "bilinear": check_bilinear,
        "leibniz": check_leibniz,
        "jacobi": check_jacobi,
        "commutator": check_commutator,
        "compat": check_compat,
    }
    reports = []
    ok = True
    for name in wanted:
        rng = rng_for[name]
        if name in poisson_fns:
            r = poisson_fns[name](P, alg, m.samples, m.tol, rng, bases)
            reports.append(r.to_dict())
            ok &= r.passed
            print(r.line())
        elif name == "coincide":
            r = check_coincidence(S, alg, m.samples, m.tol, rng, bases)
            reports.append(r.to_dict())
            ok &= r.passed
            print(r.line())
        elif name == "hamlift":
            r = check_hamlift(S, alg, min(m.samples, 20), m.tol, rng, bases)
            reports.append(r.to_dict())
            ok &= r.passed
            print(r.line())
        elif name == "nondegen":
            for label, psi in standard_forms(alg, rng).items():
                v = scalar_form_test(S, alg, psi, seed=rng, bases=bases)
                d = v.to_dict()
                d["name"] = f"nondegen[{label}]"
                reports.append(d)
                ok &= v.agree
                print(f"{v.line()} form={label} verdict={v.verdict}")
    summary = "ALL PASS" if ok else "FAIL"
    print(summary)
    return (0 if ok else 1), {"command": "check", "suite": suite, "algebra": alg.label, "passed": ok, "reports": reports}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--manifest", help="JSON manifest (algebra, dimension, functions, structures, ...)")
    p.add_argument("--json", dest="json_path", help="also write the report as JSON to this path")
    p.add_argument("--tol", type=float, help="override the manifest tolerance")
    p.add_argument("--seed", type=int, help="override the manifest seed")
    p.add_argument("--samples", type=int, help="override the manifest sample count")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _common(common)
    parser = argparse.ArgumentParser(prog="weilpoisson", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("algebra-info", parents=[common], help="dimension, basis, height and ann(m)")
    p.add_argument("spec", nargs="?", help="algebra spec string (defaults to the manifest's)")
    p.set_defaults(run=cmd_algebra_info, needs_manifest=False)

    p = sub.add_parser("lift", parents=[common], help="evaluate f^A at a near point")
    p.add_argument("function", help="function name from the manifest, or an expression")
    p.add_argument("point", help="near point as a JSON list of coefficient vectors, one per coordinate")
    p.set_defaults(run=cmd_lift, needs_manifest=True)

    p = sub.add_parser("bracket", parents=[common], help="evaluate {f^A, g^A} at a near point")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("point")
    p.add_argument("--structure", choices=("auto", "poisson", "symplectic"), default="auto")
    p.set_defaults(run=cmd_bracket, needs_manifest=True)

    p = sub.add_parser("check", parents=[common], help="run identity suites")
    p.add_argument("suite", choices=SUITES)
    p.set_defaults(run=cmd_check, needs_manifest=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.manifest:
            m = Manifest.load(args.manifest)
        elif args.needs_manifest:
            raise UsageError(f"{args.command} needs --manifest")
        else:
            if not args.spec:
                raise UsageError("algebra-info needs a spec string or --manifest")
            m = Manifest(algebra=args.spec, dimension=1)
        for key in ("tol", "seed", "samples"):
            value = getattr(args, key)
            if value is not None:
                setattr(m, key, value)
        code, payload = args.run(m, args)
    except (UsageError, SpecSyntaxError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateAt, DomainError) as exc:
        print(f"defect: {exc}", file=sys.stderr)
        return 1
    except (WeilError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json_path:
        Path(args.json_path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
