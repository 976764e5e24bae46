"""Pass/fail records produced by the identity suites."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class CheckReport:
    name: str
    algebra: str
    n: int
    samples: int
    max_defect: float
    tol: float
    passed: bool
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (
            f"CHECK {self.name} algebra={self.algebra} n={self.n} samples={self.samples} "
            f"max_defect={self.max_defect:.3e} tol={self.tol:.1e} {verdict}"
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def __bool__(self):
        return self.passed


def max_abs(*arrays) -> float:
    return max((float(abs(a).max()) if a.size else 0.0) for a in arrays)
