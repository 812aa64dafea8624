"""
Pydantic schemas for convergence studies and custom right-hand sides
"""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.config import settings
from app.schemas.solution import Method


class RhsTerm(BaseModel):
    """One term of a custom smooth factor: coefficient * fn(scale * x + shift)"""
    kind: Literal["sin", "cos", "exp", "polynomial"]
    coefficient: float = 1.0
    scale: float = 1.0
    shift: float = 0.0
    # polynomial coefficients in ascending powers of (scale * x + shift)
    coefficients: List[float] = []


class RegularitySchema(BaseModel):
    """Declared regularity index of a custom right-hand side"""
    space: Literal["weighted-shifted", "weighted"] = "weighted-shifted"
    offset: float
    plus_min_sigma: bool = False


class CustomRhsSchema(BaseModel):
    """f(x) = (1-x)^left_exponent (1+x)^right_exponent * sum(terms)"""
    name: str = Field(..., min_length=1)
    left_exponent: float = Field(0.0, gt=-1.0)
    right_exponent: float = Field(0.0, gt=-1.0)
    kinks: List[float] = []
    terms: List[RhsTerm] = Field(..., min_length=1)
    regularity: List[RegularitySchema] = []

    @field_validator("kinks")
    @classmethod
    def kinks_inside(cls, kinks: List[float]) -> List[float]:
        if any(not -1.0 < k < 1.0 for k in kinks):
            raise ValueError("kinks must lie strictly inside (-1, 1)")
        return sorted(kinks)


class StudyConfig(BaseModel):
    """Grid of a convergence study"""
    methods: List[Method] = [Method.PETROV_GALERKIN]
    alphas: List[float] = Field(..., min_length=1)
    thetas: List[float] = Field(..., min_length=1)
    mu: float = settings.DEFAULT_MU
    rhs: str = "sin"
    Ns: List[int] = Field(..., min_length=1)
    ref_N: int = settings.DEFAULT_REF_N
    error_metric: Literal["E1", "E2"] = "E1"
    quad_points: Optional[int] = Field(None, ge=1)
    reference_method: Optional[Method] = None
    output: Optional[str] = None
    format: Literal["csv", "json", "both"] = "csv"
    jobs: int = Field(settings.DEFAULT_JOBS, ge=1)
    custom_rhs: List[CustomRhsSchema] = []

    @field_validator("alphas")
    @classmethod
    def alphas_in_range(cls, alphas: List[float]) -> List[float]:
        for alpha in alphas:
            if not 1.0 < alpha < 2.0:
                raise ValueError(f"alpha must lie in (1, 2), got {alpha}")
        return alphas

    @field_validator("thetas")
    @classmethod
    def thetas_in_range(cls, thetas: List[float]) -> List[float]:
        for theta in thetas:
            if not 0.0 <= theta <= 1.0:
                raise ValueError(f"theta must lie in [0, 1], got {theta}")
        return thetas

    @field_validator("Ns")
    @classmethod
    def ns_doubling(cls, ns: List[int]) -> List[int]:
        if any(n < 0 for n in ns):
            raise ValueError("polynomial degrees must be nonnegative")
        for previous, current in zip(ns, ns[1:]):
            if current != 2 * previous:
                raise ValueError(f"N list must double at each step, got {ns}")
        return ns

    @model_validator(mode="after")
    def reference_above_grid(self) -> "StudyConfig":
        if self.ref_N <= max(self.Ns):
            raise ValueError(f"ref_N={self.ref_N} must exceed max(N)={max(self.Ns)}")
        return self


class ReportRow(BaseModel):
    """Error at one degree N and the rate against the previous row"""
    N: int
    error: float
    rate: Optional[float] = None


class PredictedOrder(BaseModel):
    """Theory-predicted convergence exponent"""
    label: str
    value: float
    source: str


class ConvergenceReport(BaseModel):
    """Convergence study outcome for one (method, alpha, theta) cell"""
    method: Method
    alpha: float
    theta: float
    mu: float
    rhs: str
    sigma: Optional[float] = None
    sigma_star: Optional[float] = None
    error_metric: Literal["E1", "E2"]
    ref_N: int
    reference_method: Method
    rows: List[ReportRow] = []
    averaged_order: Optional[float] = None
    predicted_orders: List[PredictedOrder] = []
    status: Literal["completed", "failed"] = "completed"
    error: Optional[str] = None


class StudyValidation(BaseModel):
    """Study validation schema"""
    is_valid: bool
    errors: List[str]
    warnings: List[str]
    cell_count: int


class CellLog(BaseModel):
    """Execution record of one study cell"""
    method: Method
    alpha: float
    theta: float
    status: Literal["completed", "failed"]
    execution_time: int
    error: Optional[str] = None
