"""
Pydantic schemas for spectral solutions
"""

from enum import Enum
from typing import List

from pydantic import BaseModel, Field


class Method(str, Enum):
    """Discretization schemes"""
    GALERKIN = "galerkin"
    PETROV_GALERKIN = "petrov-galerkin"

    @classmethod
    def parse(cls, value: str) -> "Method":
        aliases = {"pg": cls.PETROV_GALERKIN, "petrov_galerkin": cls.PETROV_GALERKIN}
        key = value.strip().lower()
        if key in aliases:
            return aliases[key]
        return cls(key)


class SolutionRecord(BaseModel):
    """Self-describing solution file"""
    method: Method
    alpha: float
    theta: float
    mu: float
    sigma: float
    sigma_star: float
    N: int = Field(..., ge=0)
    coefficients: List[float]
