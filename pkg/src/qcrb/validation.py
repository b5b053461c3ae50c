"""Small result type for validation-style operations."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a tolerance check.

    ``worst`` is the largest violation encountered (0 when everything is
    exact); ``ok`` states whether it stayed inside the tolerance.
    """

    ok: bool
    worst: float
    detail: str = ""

    def __bool__(self) -> bool:
        return self.ok
