"""
Pydantic schemas for the verification suite
"""

from typing import List, Optional

from pydantic import BaseModel


class CheckResult(BaseModel):
    """Outcome of one verification check"""
    name: str
    group: str
    passed: bool
    measured: Optional[float] = None
    tolerance: Optional[float] = None
    detail: str = ""


class VerificationSummary(BaseModel):
    """All checks of one verify run"""
    checks: List[CheckResult]
    passed: int
    failed: int

    @property
    def ok(self) -> bool:
        return self.failed == 0
