"""
Configuración compartida de fixtures para los tests de bbmwave.

Provee:
- Punto de diseño P* = (ρ=0.5, β=0.01, Δ=0.5)
- Settings de prueba (sin necesidad de .env, un solo proceso)
- Generators con semilla fija
- Series espectrales con máximos de términos suficientes para t pequeños
"""

import sys
from pathlib import Path

import numpy as np
import pytest

# Agregar raíz del proyecto al path
project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

from bbmwave.config import Settings
from engine.rng import RngSpec
from theory.densities import SpectralSeries
from theory.model import ModelParams, level


# Parámetros del modelo


@pytest.fixture
def params() -> ModelParams:
    """Punto de diseño P*."""
    return ModelParams(rho=0.5, beta=0.01, delta=0.5)


@pytest.fixture
def edge(params) -> float:
    """L = L_0 en P* (≈ 21.114)."""
    return level(params, 0.0)


# Settings de prueba


@pytest.fixture
def test_settings(tmp_path) -> Settings:
    """Settings con valores seguros para testing (no necesita .env)."""
    return Settings(
        BBMWAVE_THREADS=1,
        BBMWAVE_PARTICLE_BUDGET=100_000,
        BBMWAVE_BLOCK_SIZE=10,
        BBMWAVE_SERIES_MAX_TERMS=512,
        BBMWAVE_OUTPUT_DIR=str(tmp_path / "runs"),
        BBMWAVE_LOG_LEVEL="DEBUG",
    )


# Aleatoriedad


@pytest.fixture
def rng_spec() -> RngSpec:
    return RngSpec(master_seed=20240607)


@pytest.fixture
def rng(rng_spec) -> np.random.Generator:
    """Generator determinista del stream 0."""
    return rng_spec.generator(0)


# Series espectrales


@pytest.fixture
def series() -> SpectralSeries:
    """Suficiente para t ≥ 2β^{-2/3} en P*."""
    return SpectralSeries(max_terms=512)


@pytest.fixture
def long_series() -> SpectralSeries:
    """Suficiente hasta t = 1 en P*."""
    return SpectralSeries(max_terms=4096)
