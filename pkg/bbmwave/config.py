"""
Configuración centralizada de bbmwave.

Usa Pydantic BaseSettings para:
- Validar las variables de entorno BBMWAVE_* al arrancar
- Proveer tipos seguros y defaults documentados
- Leer un .env opcional en la raíz del proyecto
"""

import os
from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


# Raíz del proyecto (donde vive .env)
PROJECT_ROOT = Path(__file__).resolve().parent.parent


class Settings(BaseSettings):
    """Configuración de proceso tipada y validada."""

    model_config = SettingsConfigDict(
        env_file=str(PROJECT_ROOT / ".env"),
        env_file_encoding="utf-8",
        extra="ignore",  # Ignorar env vars no declaradas
    )

    # Paralelismo (None → os.cpu_count())
    BBMWAVE_THREADS: Optional[int] = Field(default=None, ge=1)

    # Motor
    BBMWAVE_PARTICLE_BUDGET: int = Field(default=10_000_000, ge=1)
    BBMWAVE_BLOCK_SIZE: int = Field(default=500, ge=1)

    # Series espectrales
    BBMWAVE_SERIES_MAX_TERMS: int = Field(default=64, ge=1)
    BBMWAVE_SERIES_ABS_TOL: float = Field(default=1e-10, gt=0)

    # Salidas
    BBMWAVE_OUTPUT_DIR: str = "runs"
    BBMWAVE_LOG_LEVEL: str = "INFO"

    @property
    def workers(self) -> int:
        """Procesos efectivos para run_replicas."""
        return self.BBMWAVE_THREADS or os.cpu_count() or 1

    @property
    def output_path(self) -> Path:
        """Directorio de salida absoluto."""
        out = Path(self.BBMWAVE_OUTPUT_DIR)
        if out.is_absolute():
            return out
        return PROJECT_ROOT / out


@lru_cache
def get_settings() -> Settings:
    """Singleton de configuración (cacheado)."""
    return Settings()
