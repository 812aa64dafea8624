"""
Configuration settings for the fractional spectral solver
"""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Application settings"""

    # Application
    APP_NAME: str = "fracspec"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "WARNING"
    LOG_FORMAT: str = "console"  # console | json

    # Problem defaults
    DEFAULT_MU: float = 1.0
    DEFAULT_REF_N: int = 512
    MIN_RHS_QUAD_POINTS: int = 128

    # Exponent equation
    SIGMA_TOLERANCE: float = 1e-16
    SIGMA_MAX_ITERATIONS: int = 200

    # Operator oracles (mpmath decimal digits)
    ORACLE_PRECISION: int = 30

    # Quadrature
    QUADRATURE_NEWTON_ITERATIONS: int = 5
    QUADRATURE_CACHE_SIZE: int = 512

    # Linear solve
    SOLVE_RESIDUAL_TOLERANCE: float = 1e-10

    # Studies
    DEFAULT_JOBS: int = 1
    OUTPUT_DIRECTORY: str = "./results"
    CSV_SIGNIFICANT_DIGITS: int = 6

    class Config:
        env_file = ".env"
        case_sensitive = True


# Create settings instance
settings = Settings()
