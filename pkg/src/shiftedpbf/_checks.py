from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a verification: truthy iff it passed, always carrying the defect."""

    passed: bool
    defect: float
    tol: float
    detail: dict = field(default_factory=dict)

    def __bool__(self):
        return bool(self.passed)


def compare(defect, tol, exact, **detail):
    """Build a CheckResult; ``exact`` demands a zero defect regardless of ``tol``."""
    passed = defect == 0 if exact else defect <= tol
    return CheckResult(bool(passed), float(defect), 0.0 if exact else float(tol), detail)
