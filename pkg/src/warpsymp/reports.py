"""Check-result records and worst-case residual helpers.

Every verification in the package reduces to a CheckResult: a named
pass/fail with its threshold, the worst sampled error, the point where it
occurred, and the seed that generated the sample.  Reports serialise to
plain dictionaries so the whole suite output is stable JSON.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    name: str
    passed: bool
    threshold: float
    worst_error: float
    worst_point: dict | None = None
    seed: int | None = None
    assertable: bool = True
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check_name": self.name,
            "pass": self.passed,
            "threshold": self.threshold,
            "worst_error": self.worst_error,
            "worst_point": self.worst_point,
            "seed": self.seed,
            "assertable": self.assertable,
            "details": self.details,
        }


def worst_expression_error(expression, points):
    """Max |expression| over points and the point achieving it."""
    worst = -1.0
    worst_point = None
    for point in points:
        magnitude = abs(expression.evaluate(point))
        if magnitude > worst:
            worst = magnitude
            worst_point = point
    return max(worst, 0.0), (worst_point.as_dict() if worst_point is not None else None)


def worst_form_error(form, points):
    """Max coefficient magnitude of a form over points, with the point."""
    worst = -1.0
    worst_point = None
    for point in points:
        magnitude = form.max_abs_at(point)
        if magnitude > worst:
            worst = magnitude
            worst_point = point
    return max(worst, 0.0), (worst_point.as_dict() if worst_point is not None else None)
