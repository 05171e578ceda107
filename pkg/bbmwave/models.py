"""
Modelos Pydantic de configuración de experimentos.

Define:
- ExperimentConfig: configuración completa de una corrida (un archivo JSON)
- Subconfiguraciones de series, supervivencia, absorciones y calibración
- Conversión a RunSpec / StepPolicy / SpectralSeries con los defaults de Settings

JSON es el dialecto documentado: parse → serialize → parse es la identidad.
Todas las magnitudes están en unidades del modelo (espacio, tiempo).
"""

from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from bbmwave.config import Settings
from engine.replicas import InitialCondition, InitKind, RunSpec
from engine.rng import SEED_MAX
from engine.simulator import SURVIVAL_DELTA_MAX, StepPolicy
from theory.densities import SpectralSeries
from theory.model import Barrier, ModelParams


class ExperimentName(str, Enum):
    """Experimentos disponibles."""

    SIMULATE = "simulate"
    VERIFY_AIRY = "verify-airy"
    VERIFY_DENSITY = "verify-density"
    MARTINGALE = "martingale"
    BULK_GAUSS = "bulk-gauss"
    EDGE_PROFILE = "edge-profile"
    SURVIVAL = "survival"
    HITS = "hits"
    HEURISTIC_CURVE = "heuristic-curve"
    CALIBRATE = "calibrate"


# Experimentos Monte Carlo: requieren replicas ≥ 1
MC_EXPERIMENTS = {
    ExperimentName.SIMULATE,
    ExperimentName.MARTINGALE,
    ExperimentName.BULK_GAUSS,
    ExperimentName.EDGE_PROFILE,
    ExperimentName.SURVIVAL,
    ExperimentName.HITS,
}


def design_point() -> ModelParams:
    """Punto de diseño P* = (ρ=0.5, β=0.01, Δ=0.5, tasas lineales)."""
    return ModelParams(rho=0.5, beta=0.01, delta=0.5)


class SeriesConfig(BaseModel):
    """Truncamiento de las series espectrales (None → Settings)."""

    model_config = ConfigDict(extra="forbid")

    num_terms: Optional[int] = Field(default=None, ge=1, description="Términos fijos")
    max_terms: Optional[int] = Field(default=None, ge=1, description="Máximo adaptativo")
    abs_tol: Optional[float] = Field(default=None, gt=0, description="Tolerancia de la cola")

    def build(self, settings: Settings) -> SpectralSeries:
        return SpectralSeries(
            num_terms=self.num_terms,
            max_terms=self.max_terms or settings.BBMWAVE_SERIES_MAX_TERMS,
            abs_tol=self.abs_tol or settings.BBMWAVE_SERIES_ABS_TOL,
        )


class SurvivalConfig(BaseModel):
    """Sonda de supervivencia desde una partícula en x."""

    model_config = ConfigDict(extra="forbid")

    x: float = Field(default=10.0, gt=0, description="Posición inicial")
    delta: float = Field(default=0.25, gt=0, lt=SURVIVAL_DELTA_MAX, description="δ de la cota")
    horizon: Optional[float] = Field(
        default=None, ge=0, description="Horizonte (None → ln(1/δ)/(δβx))"
    )


class HitsConfig(BaseModel):
    """Ventana temporal [u, v] de conteo de absorciones."""

    model_config = ConfigDict(extra="forbid")

    u: float = Field(default=1.0, ge=0)
    v: float = Field(default=10.0, ge=0)
    bins: int = Field(default=9, ge=1, description="Bins del histograma temporal")

    @model_validator(mode="after")
    def _ordered(self) -> "HitsConfig":
        if self.v < self.u:
            raise ValueError(f"hits requiere u ≤ v, recibido u={self.u}, v={self.v}")
        return self


class CalibrationConfig(BaseModel):
    """Parámetros (N, μ, s) del modelo discreto."""

    model_config = ConfigDict(extra="forbid")

    population: float = Field(default=1e6, gt=1, description="N")
    mu: float = Field(default=1e-4, gt=0, description="Tasa de mutación μ")
    s: float = Field(default=1e-2, gt=0, description="Ventaja selectiva s")


class ExperimentConfig(BaseModel):
    """Configuración de un experimento; claves desconocidas se rechazan."""

    model_config = ConfigDict(extra="forbid")

    experiment: ExperimentName
    params: ModelParams = Field(default_factory=design_point)
    init: InitialCondition = Field(
        default_factory=lambda: InitialCondition(kind=InitKind.POINT, x=0.0)
    )
    barrier: Barrier = Field(default_factory=Barrier)
    horizon: float = Field(default=0.0, ge=0, description="Tiempo final")
    snapshot_times: List[float] = Field(default_factory=list)
    replicas: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0, le=SEED_MAX, description="Semilla maestra")
    outputs: Optional[str] = Field(default=None, description="Directorio de salida")
    A_list: List[float] = Field(default_factory=lambda: [0.0])
    step: Optional[StepPolicy] = None
    series: SeriesConfig = Field(default_factory=SeriesConfig)
    survival: SurvivalConfig = Field(default_factory=SurvivalConfig)
    hits: HitsConfig = Field(default_factory=HitsConfig)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    record_particles: bool = False

    @field_validator("snapshot_times")
    @classmethod
    def _sorted(cls, value: List[float]) -> List[float]:
        if any(b < a for a, b in zip(value, value[1:])):
            raise ValueError(f"snapshot_times debe estar ordenado: {value}")
        return value

    @field_validator("A_list")
    @classmethod
    def _non_empty(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("A_list no puede estar vacía")
        return value

    @model_validator(mode="after")
    def _check_run(self) -> "ExperimentConfig":
        bad = [t for t in self.snapshot_times if t < 0 or t > self.horizon]
        if bad:
            raise ValueError(f"snapshot_times fuera de [0, {self.horizon}]: {bad}")
        if self.experiment in MC_EXPERIMENTS and self.replicas < 1:
            raise ValueError(f"{self.experiment.value} requiere replicas ≥ 1")
        return self

    def step_policy(self, settings: Settings) -> StepPolicy:
        """StepPolicy con el presupuesto de Settings salvo que se fije explícitamente."""
        if self.step is None:
            return StepPolicy(particle_budget=settings.BBMWAVE_PARTICLE_BUDGET)
        if "particle_budget" in self.step.model_fields_set:
            return self.step
        return self.step.model_copy(update={"particle_budget": settings.BBMWAVE_PARTICLE_BUDGET})

    def run_spec(self, settings: Settings, **overrides) -> RunSpec:
        """RunSpec de la corrida Monte Carlo; overrides reemplaza campos puntuales."""
        fields = dict(
            params=self.params,
            init=self.init,
            barrier=self.barrier,
            horizon=self.horizon,
            snapshot_times=self.snapshot_times,
            replicas=self.replicas,
            step=self.step_policy(settings),
            A_list=self.A_list,
            record_particles=self.record_particles,
        )
        fields.update(overrides)
        return RunSpec(**fields)
