"""
Configuration module for the padyn toolkit.
Manages environment variables and default experiment settings.
"""

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """
    Application configuration settings.
    All values are loaded from PADYN_-prefixed environment variables.
    """

    # Application Settings
    APP_NAME: str = "padyn"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # p-adic Arithmetic
    PRECISION_DIGITS: int = 64
    ROOT_GUARD_DIGITS: int = 8
    SEED: int = 0

    # Orbit Analysis
    CONVERGENCE_THRESHOLD: int = 30
    ESCAPE_WINDOW: int = 10
    TRUNCATE_ORBITS: bool = True
    GAMMA_MAX_N: int = 512

    # Random Parameter Generation
    PARAM_VALUATION_RANGE: int = 3
    PARAM_UNIT_DIGITS: int = 4

    # Residue Model
    RESIDUE_GUARD: int = 3

    # Suite Sizes
    NORM_AXIOM_SAMPLES: int = 10000
    IDENTITY_SAMPLES: int = 1000
    PARAMETER_SETS: int = 100
    SPHERE_SAMPLES: int = 500
    SIEGEL_SAMPLES: int = 100
    SIEGEL_ITERATIONS: int = 100
    BASIN_SAMPLES: int = 100
    BASIN_ITERATIONS: int = 300

    # Report Output
    REPORT_FORMAT: str = "records"

    model_config = {
        "env_prefix": "PADYN_",
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
        "extra": "ignore"
    }


get_settings_cached = None


def get_settings() -> Settings:
    """
    Returns settings instance.
    """
    global get_settings_cached
    if get_settings_cached is None:
        get_settings_cached = Settings()
    return get_settings_cached


# Export settings instance for convenience
settings = get_settings()
