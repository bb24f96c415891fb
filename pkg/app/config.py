import os
import shutil
from typing import List, Optional, Union
from pydantic_settings import BaseSettings
from pydantic import field_validator


class Settings(BaseSettings):
    # App Info
    APP_NAME: str = "STL Relax"
    VERSION: str = "1.0.0"
    ENVIRONMENT: str = "development"
    LOG_LEVEL: str = "INFO"

    # Encoding defaults
    BIG_M: float = 1e6
    EPSILON: float = 1e-6
    SATISFACTION_MARGIN: float = 1e-4
    TIE_BREAK_WEIGHT: float = 1e-4

    # Relaxation tolerances
    GAMMA_F: float = 1.0
    GAMMA_G: float = 1.0

    # Solver backend (cbc | highs)
    SOLVER_BACKEND: str = "cbc"
    SOLVER_PATH: str = ""  # Executable override; falls back to PuLP's bundled CBC, then PATH
    SOLVER_TIME_LIMIT: float = 600.0
    SOLVER_MIP_GAP: float = 0.0
    SOLVER_THREADS: int = 1
    KEEP_LP: bool = False  # Debug: keep LP/solution files in the work dir
    WORK_DIR: str = ""  # Root for per-solve temp dirs; empty = system temp

    # Brute-force oracle
    ORACLE_MAX_ENUMERATIONS: int = 10_000_000

    # Outputs
    OUTPUT_DIR: str = "./out"
    AUTO_EXTEND_HORIZON: bool = True

    # CORS (HTTP surface)
    CORS_ORIGINS: Union[str, List[str]] = "http://localhost:3000"

    @field_validator('CORS_ORIGINS', mode='before')
    @classmethod
    def parse_cors_origins(cls, v):
        if isinstance(v, str):
            return [origin.strip() for origin in v.split(',')]
        return v

    @field_validator('SOLVER_BACKEND')
    @classmethod
    def check_backend(cls, v: str) -> str:
        v = v.strip().lower()
        if v not in ("cbc", "highs"):
            raise ValueError(f"Unsupported solver backend: {v}")
        return v

    class Config:
        env_file = ".env"
        case_sensitive = True

    @property
    def solver_executable(self) -> Optional[str]:
        """Resolved CBC executable: SOLVER_PATH, then PuLP's bundled binary, then PATH."""
        if self.SOLVER_PATH:
            return self.SOLVER_PATH
        try:
            import pulp
            path = pulp.PULP_CBC_CMD(msg=False).path
            if path and os.path.exists(path):
                return path
        except Exception:
            pass
        return shutil.which("cbc")

    @property
    def horizon_extension_enabled(self) -> bool:
        return self.AUTO_EXTEND_HORIZON


# Create settings instance
settings = Settings()
