"""
Functionals - Funcionales de la población y test de martingala.

Este módulo:
1. Resume un estado: N, Y = Σe^{ρX}, Z_A por A, extremos (total y por réplica)
2. Construye las medidas empíricas ζ (bulk) y ξ (borde)
3. Calcula V_{φ,A} y la población predicha Z(0)·e^{-ρ³/3β}/Ai'(γ₁)²
4. Compara E[Z_A(t)] Monte Carlo con e^{-Aβt/ρ}·z_A(x₀) (test de martingala)

Las sumas se hacen en dominio log (logsumexp) para no perder los átomos
del borde, que dominan Y y Z.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field
from scipy.special import logsumexp

from analysis.measures import EmpiricalMeasure
from engine.population import PopulationState, replica_sums, total_log_sum
from engine.replicas import Ensemble, InitKind
from theory.airy import airy_zero_deriv
from theory.errors import DomainError, UsageError
from theory.model import BarrierKind, ModelParams, level, z_weight

logger = logging.getLogger(__name__)


def _safe_exp(value: float) -> float:
    if value > 709.0:
        return math.inf
    return math.exp(value)


class SummarySnapshot(BaseModel):
    """Funcionales de un estado en un tiempo."""

    time: float = Field(..., description="Tiempo del snapshot")
    N: int = Field(..., ge=0, description="Número de partículas")
    Y: float = Field(..., ge=0, description="Σ e^{ρX_i}")
    log_Y: float = Field(..., description="log Y (-inf si N = 0)")
    A_list: List[float] = Field(..., description="Valores de A")
    Z_A: List[float] = Field(..., description="Z_A por cada A de A_list")
    min_position: Optional[float] = Field(default=None, description="Mínima posición")
    max_position: Optional[float] = Field(default=None, description="Máxima posición")


def _snapshot(
    time: float,
    count: int,
    log_y: float,
    log_z: Sequence[float],
    lo: float,
    hi: float,
    A_list: Sequence[float],
) -> SummarySnapshot:
    return SummarySnapshot(
        time=time,
        N=int(count),
        Y=_safe_exp(log_y),
        log_Y=float(log_y),
        A_list=list(A_list),
        Z_A=[_safe_exp(v) for v in log_z],
        min_position=None if count == 0 else float(lo),
        max_position=None if count == 0 else float(hi),
    )


def summary(
    state: PopulationState, params: ModelParams, A_list: Sequence[float] = (0.0,)
) -> SummarySnapshot:
    """
    Funcionales sobre todas las partículas del estado.

    Un estado con varias réplicas se trata como su unión disjunta.
    """
    sums = replica_sums(state, params, A_list)
    log_z = [total_log_sum(sums.log_z[:, j]) for j in range(len(A_list))]
    if state.size:
        lo, hi = float(state.positions.min()), float(state.positions.max())
    else:
        lo = hi = math.nan
    return _snapshot(state.time, state.size, total_log_sum(sums.log_y), log_z, lo, hi, A_list)


def summary_by_replica(
    state: PopulationState, params: ModelParams, A_list: Sequence[float] = (0.0,)
) -> List[SummarySnapshot]:
    """Un SummarySnapshot por réplica, vectorizado sobre el estado completo."""
    sums = replica_sums(state, params, A_list)
    return [
        _snapshot(
            state.time,
            sums.counts[r],
            sums.log_y[r],
            sums.log_z[r],
            sums.min_position[r],
            sums.max_position[r],
            A_list,
        )
        for r in range(state.num_replicas)
    ]


def ensemble_snapshots(ensemble: Ensemble) -> List[List[SummarySnapshot]]:
    """snapshots[r][i] para la réplica r en el tiempo ensemble.times[i]."""
    A_list = ensemble.spec.A_list
    return [
        [
            _snapshot(
                float(t),
                ensemble.counts[r, i],
                ensemble.log_y[r, i],
                ensemble.log_z[r, i],
                ensemble.min_position[r, i],
                ensemble.max_position[r, i],
                A_list,
            )
            for i, t in enumerate(ensemble.times)
        ]
        for r in range(ensemble.num_replicas)
    ]


# Medidas empíricas


def bulk_measure(state: PopulationState, params: ModelParams) -> EmpiricalMeasure:
    """ζ: peso 1 en X_i·√(β/ρ); δ₀ si N = 0."""
    if state.size == 0:
        return EmpiricalMeasure.point_mass(0.0)
    scale = math.sqrt(params.beta / params.rho)
    return EmpiricalMeasure.from_atoms(state.positions * scale)


def edge_measure(state: PopulationState, params: ModelParams) -> EmpiricalMeasure:
    """
    ξ: peso e^{ρX_i}/Y en (2β)^{1/3}(L − X_i); δ₀ si N = 0.

    Los pesos se normalizan en dominio log, así la constante es Y.
    """
    if state.size == 0:
        return EmpiricalMeasure.point_mass(0.0)
    log_w = params.rho * state.positions
    weights = np.exp(log_w - logsumexp(log_w))
    locations = params.edge_scale * (level(params, 0.0) - state.positions)
    return EmpiricalMeasure.from_atoms(locations, weights)


def replica_measures(
    state: PopulationState, params: ModelParams, kind: str = "bulk"
) -> List[EmpiricalMeasure]:
    """Medidas por réplica sobreviviente."""
    build = bulk_measure if kind == "bulk" else edge_measure
    return [build(state.for_replica(int(r)), params) for r in state.surviving_replicas()]


# Funcionales


def weighted_functional(
    state: PopulationState,
    params: ModelParams,
    A: float,
    phi: Callable[[np.ndarray], np.ndarray],
) -> float:
    """
    V_{φ,A} = Σ e^{ρX_i}·φ(X_i)·1{X_i < L_A}.

    Args:
        phi: Función vectorizada definida en (-∞, L_A)
    """
    below = state.positions[state.positions < level(params, A)]
    if below.size == 0:
        return 0.0
    values = np.asarray(phi(below), dtype=float)
    if not np.any(values):
        return 0.0
    total, sign = logsumexp(params.rho * below, b=values, return_sign=True)
    return float(sign * np.exp(total))


def predicted_population(Z0: float, params: ModelParams) -> float:
    """N predicho = Z0·e^{-ρ³/3β}/Ai'(γ₁)²."""
    if Z0 < 0:
        raise DomainError(f"predicted_population requiere Z0 ≥ 0, recibido {Z0}")
    factor = math.exp(-params.selection_strength / 3.0) / airy_zero_deriv(1) ** 2
    return Z0 * factor


# Test de martingala


class MartingaleRow(BaseModel):
    time: float
    mean: float = Field(..., description="Media MC de Z_A(t)")
    stderr: float = Field(..., description="Error estándar de la media")
    target: float = Field(..., description="e^{-Aβt/ρ}·z_A(x₀)")
    z_score: float = Field(..., description="(mean − target)/stderr")
    variance: float = Field(..., description="Varianza MC de Z_A(t) (diagnóstico)")


class MartingaleReport(BaseModel):
    """Resultado de martingale_test."""

    A: float
    x0: float
    replicas: int
    rows: List[MartingaleRow] = Field(default_factory=list)

    @property
    def max_abs_z(self) -> float:
        return max((abs(row.z_score) for row in self.rows), default=0.0)


def _check_ensemble(ensemble: Ensemble, params: ModelParams, A: float, x0: float) -> None:
    spec = ensemble.spec
    if spec.barrier.kind != BarrierKind.FIXED or abs(spec.barrier.A - A) > 1e-12:
        raise UsageError(
            f"martingale_test requiere barrera fija con A = {A}; "
            f"el ensemble usa {spec.barrier.kind.value} con A = {spec.barrier.A}"
        )
    if spec.init.kind != InitKind.POINT or abs(spec.init.position(spec.params) - x0) > 1e-12:
        raise UsageError(f"martingale_test requiere init_point({x0}); el ensemble usa {spec.init}")
    if spec.params != params:
        raise UsageError("Los parámetros del ensemble no coinciden con los del test")
    if ensemble.num_replicas < 2:
        raise UsageError("martingale_test requiere al menos 2 réplicas")


def martingale_test(
    ensemble: Ensemble,
    params: ModelParams,
    A: float,
    x0: float,
    times: Sequence[float],
) -> MartingaleReport:
    """
    Media MC de Z_A(t) contra e^{-Aβt/ρ}·z_A(x₀) en cada t.

    Raises:
        UsageError: Barrera, condición inicial o tiempos incompatibles con el ensemble
    """
    _check_ensemble(ensemble, params, A, x0)
    start = z_weight(params, A, x0)
    n = ensemble.num_replicas

    rows = []
    for t in times:
        values = ensemble.z_values(A, t)
        mean = float(np.mean(values))
        variance = float(np.var(values, ddof=1))
        stderr = math.sqrt(variance / n)
        target = math.exp(-A * params.beta * t / params.rho) * start
        if stderr > 0:
            z = (mean - target) / stderr
        else:
            z = 0.0 if mean == target else math.copysign(math.inf, mean - target)
        rows.append(
            MartingaleRow(
                time=t, mean=mean, stderr=stderr, target=target, z_score=z, variance=variance
            )
        )
        logger.info(
            f"Martingala t = {t:g}: media = {mean:.6g} ± {stderr:.3g}, "
            f"objetivo = {target:.6g}, z = {z:+.2f}"
        )

    return MartingaleReport(A=A, x0=x0, replicas=n, rows=rows)
