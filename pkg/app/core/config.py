"""
Configurações centrais do classificador.
Carrega variáveis de ambiente via python-dotenv e expõe via Pydantic Settings.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from pathlib import Path

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

# ---------------------------------------------------------------------------
# Logging estruturado
# ---------------------------------------------------------------------------
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"

logging.basicConfig(level=logging.WARNING, format=LOG_FORMAT)
logger = logging.getLogger("polydisc")

# ---------------------------------------------------------------------------
# Diretório raiz do projeto
# ---------------------------------------------------------------------------
BASE_DIR: Path = Path(__file__).resolve().parent.parent.parent

# Versão do esquema JSON embutida em todos os relatórios
SCHEMA_VERSION = "1.0"


# ---------------------------------------------------------------------------
# Settings
# ---------------------------------------------------------------------------
class Settings(BaseSettings):
    """Configurações carregadas do arquivo .env na raiz do projeto."""

    model_config = SettingsConfigDict(
        env_file=str(BASE_DIR / ".env"),
        env_file_encoding="utf-8",
        env_prefix="POLYDISC_",
        extra="ignore",
    )

    # ---- Tolerâncias -------------------------------------------------------
    TOL_CONTACT: float = 1e-9
    TOL_SIG: float = 1e-8
    TOL_DEP: float = 1e-7
    TOL_JAC: float = 1e-8
    TOL_JULIA: float = 1e-6

    # ---- Varredura de contatos ---------------------------------------------
    GRID_N: int = 64
    SCREEN_GRID_N: int = 64
    SELF_MAP_MARGIN: float = 1e-9
    SAMPLES_PER_COMPONENT: int = 8
    REFINE_TOL: float = 1e-12
    REFINE_MAX_ITER: int = 50
    POLISH_DPS: int = 50

    # ---- Monte-Carlo -------------------------------------------------------
    MC_SAMPLES: int = 1_000_000
    MC_SEED: int = 0
    MC_CHUNK: int = 65_536
    MC_WORKERS: int = 4
    IMPORTANCE_FACTOR: float = 10.0

    # ---- Logging -----------------------------------------------------------
    LOG_LEVEL: str = "WARNING"

    @field_validator("TOL_CONTACT", "TOL_SIG", "TOL_DEP", "TOL_JAC", "TOL_JULIA")
    @classmethod
    def _positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("tolerâncias devem ser positivas")
        return v

    @field_validator("GRID_N", "SCREEN_GRID_N")
    @classmethod
    def _grid(cls, v: int) -> int:
        if v < 16:
            raise ValueError("a grade precisa de pelo menos 16 pontos por ângulo")
        return v


@lru_cache
def get_settings() -> Settings:
    """Singleton cacheado das configurações."""
    return Settings()


def configure_logging(level: str | int | None = None) -> None:
    """Ajusta o nível do logger do projeto (stderr, nunca stdout)."""
    if level is None:
        level = get_settings().LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    logger.setLevel(level)
