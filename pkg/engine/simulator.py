"""
Simulator - Evolución de la BBM con esquema de Euler y thinning de eventos.

Este módulo:
1. Construye estados iniciales (partícula puntual o nube en el borde L − u)
2. Evoluciona la población: movimiento, absorción en la barrera y luego
   un uniforme contra [0, bΔt, (b+d)Δt] por partícula
3. Estima la probabilidad de supervivencia con intervalo de Wilson
4. Expone la cota de supervivencia 2βx/Δ y su horizonte ln(1/δ)/(δβx)

Δt = min(dt_max, event_cap / max(b + d), horizonte − t), así la probabilidad
de evento por paso queda acotada por event_cap. El cruce de barrera se
detecta solo al final de cada paso.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from engine.population import EventLog, PopulationState
from theory.errors import CapacityError, DomainError, NumericError
from theory.model import Barrier, BarrierKind, ModelParams, barrier_level, level, rates

logger = logging.getLogger(__name__)

DEFAULT_PARTICLE_BUDGET = 10_000_000
MAX_EVENT_PROBABILITY = 1.0
SURVIVAL_DELTA_MAX = 1.0 / 3.0


class StepPolicy(BaseModel):
    """Control del paso temporal y de los límites de capacidad."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt_max: float = Field(default=0.05, gt=0, description="Paso máximo")
    event_cap: float = Field(
        default=0.05, gt=0, le=0.5, description="Cota de (b+d)Δt para la partícula más rápida"
    )
    particle_budget: int = Field(
        default=DEFAULT_PARTICLE_BUDGET, ge=1, description="Máximo de partículas por réplica"
    )
    position_ceiling: Optional[float] = Field(
        default=None, description="Techo de posición; superarlo aborta la corrida"
    )


# Estados iniciales


def init_point(x: float, replicas: int = 1) -> PopulationState:
    """Una partícula en x por réplica, tiempo 0."""
    if replicas < 0:
        raise DomainError(f"replicas debe ser ≥ 0, recibido {replicas}")
    return PopulationState.from_positions(
        np.full(replicas, float(x)), replica=np.arange(replicas), num_replicas=replicas
    )


def edge_cloud_size(params: ModelParams, u: float) -> int:
    """⌈e^{ρu}/(uρ³)⌉."""
    if u <= 0:
        raise DomainError(f"La nube del borde requiere u > 0, recibido {u}")
    return int(math.ceil(math.exp(params.rho * u) / (u * params.rho**3)))


def init_edge_cloud(
    params: ModelParams,
    u: float,
    budget: int = DEFAULT_PARTICLE_BUDGET,
    replicas: int = 1,
) -> PopulationState:
    """
    ⌈e^{ρu}/(uρ³)⌉ partículas en L − u por réplica.

    Args:
        params: Parámetros del modelo
        u: Distancia al borde L (> 0)
        budget: Presupuesto de partículas por réplica
        replicas: Réplicas en el estado

    Raises:
        DomainError: Si u ≤ 0
        CapacityError: Si la nube no cabe en el presupuesto
    """
    count = edge_cloud_size(params, u)
    if count > budget:
        raise CapacityError(
            f"La nube del borde con u = {u} requiere {count} partículas; "
            f"presupuesto = {budget}. Subir BBMWAVE_PARTICLE_BUDGET a ≥ {count}"
        )

    lower, upper = 1.0 / params.rho, params.beta ** (-1.0 / 3.0)
    if not lower < u <= upper:
        logger.warning(f"u = {u} fuera de la ventana recomendada ({lower:.4g}, {upper:.4g}]")

    edge = level(params, 0.0)
    logger.debug(f"Nube del borde: {count} partículas en L − u = {edge - u:.6g}")
    return PopulationState.from_positions(
        np.full(count * replicas, edge - u),
        replica=np.repeat(np.arange(replicas), count),
        num_replicas=replicas,
    )


# Evolución


def _check_capacity(state: PopulationState, step: StepPolicy, log: EventLog) -> None:
    if state.size > step.particle_budget:
        counts = state.counts()
        worst = int(np.argmax(counts))
        if counts[worst] > step.particle_budget:
            raise CapacityError(
                f"Presupuesto de partículas excedido en t = {state.time:.6g}: "
                f"N = {int(counts[worst])} > {step.particle_budget}",
                partial_log=log,
                replica=worst,
            )

    if step.position_ceiling is not None and state.size:
        top = int(np.argmax(state.positions))
        if state.positions[top] > step.position_ceiling:
            raise CapacityError(
                f"Techo de posición {step.position_ceiling} superado en t = {state.time:.6g}: "
                f"x = {state.positions[top]:.6g}",
                partial_log=log,
                replica=int(state.replica[top]),
            )


def _time_step(
    params: ModelParams, state: PopulationState, step: StepPolicy, horizon: float
) -> float:
    birth, death = rates(params, state.positions)
    fastest = float(np.max(birth + death))
    dt = step.dt_max if fastest <= 0 else min(step.dt_max, step.event_cap / fastest)
    return min(dt, horizon - state.time)


def evolve(
    state: PopulationState,
    params: ModelParams,
    barrier: Barrier,
    horizon: float,
    step: StepPolicy,
    rng: np.random.Generator,
    log: Optional[EventLog] = None,
) -> Tuple[PopulationState, EventLog]:
    """
    Evoluciona la población hasta el horizonte.

    Args:
        state: Estado inicial (no se modifica)
        params: Parámetros del modelo
        barrier: Barrera absorbente
        horizon: Tiempo final (≥ state.time)
        step: Política de paso
        rng: Generator del bloque
        log: EventLog a continuar (uno nuevo si es None)

    Returns:
        Tuple (estado en el horizonte, EventLog)

    Raises:
        DomainError: Si horizon < state.time
        CapacityError: Presupuesto o techo superado (con el log parcial)
        NumericError: Posiciones no finitas
    """
    if horizon < state.time:
        raise DomainError(f"horizon = {horizon} < tiempo actual {state.time}")

    current = state.copy()
    if log is None:
        log = EventLog(num_replicas=current.num_replicas)
        log.observe(current.positions, current.replica)

    steps = 0
    while current.time < horizon and current.size > 0:
        dt = _time_step(params, current, step, horizon)
        if dt <= 0:
            break

        current.positions = (
            current.positions - params.rho * dt + math.sqrt(dt) * rng.standard_normal(current.size)
        )
        current.time += dt
        if horizon - current.time <= 1e-12 * max(1.0, horizon):
            current.time = horizon  # absorbe el redondeo acumulado de los pasos
        steps += 1

        if not np.all(np.isfinite(current.positions)):
            raise NumericError(f"Posición no finita en t = {current.time:.6g}")
        log.observe(current.positions, current.replica)

        threshold = barrier_level(barrier, params, current.time)
        if barrier.kind != BarrierKind.NONE:
            absorbed = current.positions >= threshold
            if absorbed.any():
                log.record_absorptions(
                    current.time,
                    current.positions[absorbed],
                    current.ids[absorbed],
                    current.replica[absorbed],
                )
                current = current.select(~absorbed)
                if current.size == 0:
                    break

        birth, death = rates(params, current.positions)
        p_birth = birth * dt
        p_total = p_birth + death * dt
        if np.any(p_total > MAX_EVENT_PROBABILITY):
            raise NumericError(
                f"Probabilidad de evento > 1 en t = {current.time:.6g}; reducir dt_max o event_cap"
            )

        draw = rng.random(current.size)
        splits = draw < p_birth
        dies = (draw >= p_birth) & (draw < p_total)

        if dies.any():
            log.record_deaths(current.replica[dies])
        if splits.any():
            parents = np.flatnonzero(splits)
            new_ids = current.next_id + np.arange(parents.size, dtype=np.int64)
            log.record_births(current.replica[parents])
            keep = ~dies
            current = PopulationState(
                time=current.time,
                ids=np.concatenate([current.ids[keep], new_ids]),
                parent_ids=np.concatenate([current.parent_ids[keep], current.ids[parents]]),
                positions=np.concatenate([current.positions[keep], current.positions[parents]]),
                replica=np.concatenate([current.replica[keep], current.replica[parents]]),
                num_replicas=current.num_replicas,
                next_id=current.next_id + parents.size,
            )
        elif dies.any():
            current = current.select(~dies)

        _check_capacity(current, step, log)

    if current.size == 0:
        current.time = horizon

    logger.debug(
        f"evolve: t = {current.time:.6g}, N = {current.size}, pasos = {steps}, "
        f"absorciones = {log.num_absorptions}"
    )
    return current, log


# Supervivencia


class SurvivalEstimate(BaseModel):
    """Fracción de réplicas con N(horizonte) ≥ 1."""

    horizon: float = Field(..., description="Horizonte")
    p_hat: float = Field(..., description="Estimación puntual")
    ci95: Tuple[float, float] = Field(..., description="Intervalo de Wilson al 95%")
    survivors: int = Field(..., description="Réplicas sobrevivientes")
    replicas: int = Field(..., description="Réplicas totales")


def wilson_interval(successes: int, trials: int) -> Tuple[float, float]:
    """Intervalo de Wilson al 95%."""
    if trials == 0:
        return 0.0, 1.0
    ci = stats.binomtest(successes, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return float(ci.low), float(ci.high)


def survival_curve(
    params: ModelParams,
    x: float,
    horizons: Sequence[float],
    replicas: int,
    rng: np.random.Generator,
    step: Optional[StepPolicy] = None,
) -> List[SurvivalEstimate]:
    """
    Supervivencia en varios horizontes sobre las mismas trayectorias.

    Los eventos de supervivencia quedan anidados: la curva es no creciente.
    """
    if x <= 0:
        raise DomainError(f"survival_probe requiere x > 0, recibido {x}")
    if replicas < 1:
        raise DomainError(f"survival_probe requiere replicas ≥ 1, recibido {replicas}")
    if any(h < 0 for h in horizons):
        raise DomainError(f"Horizontes negativos: {list(horizons)}")

    step = step or StepPolicy()
    state = init_point(x, replicas)
    log = None
    estimates: List[SurvivalEstimate] = []
    for horizon in sorted(horizons):
        if horizon > state.time:
            state, log = evolve(state, params, Barrier(), horizon, step, rng, log=log)
        survivors = int(state.surviving_replicas().size)
        estimates.append(
            SurvivalEstimate(
                horizon=horizon,
                p_hat=survivors / replicas,
                ci95=wilson_interval(survivors, replicas),
                survivors=survivors,
                replicas=replicas,
            )
        )
    return estimates


def survival_probe(
    params: ModelParams,
    x: float,
    horizon: float,
    replicas: int,
    rng: np.random.Generator,
    step: Optional[StepPolicy] = None,
) -> SurvivalEstimate:
    """
    Fracción de réplicas desde init_point(x) con N(horizon) ≥ 1.

    horizon = 0 da p_hat = 1.
    """
    return survival_curve(params, x, [horizon], replicas, rng, step)[0]


def survival_horizon(params: ModelParams, x: float, delta: float = 0.25) -> float:
    """
    Horizonte ln(1/δ)/(δβx) de la cota de supervivencia.

    Raises:
        DomainError: Si x ≤ 0 o δ fuera de (0, 1/3), donde (1+δ)/(1−δ) < 2
    """
    if x <= 0:
        raise DomainError(f"survival_horizon requiere x > 0, recibido {x}")
    if not 0.0 < delta < SURVIVAL_DELTA_MAX:
        raise DomainError(f"δ debe estar en (0, 1/3), recibido {delta}")
    return math.log(1.0 / delta) / (delta * params.beta * x)


def survival_bound(params: ModelParams, x: float) -> float:
    """Cota 2βx/Δ de la probabilidad de supervivencia."""
    if x <= 0:
        raise DomainError(f"survival_bound requiere x > 0, recibido {x}")
    return 2.0 * params.beta * x / params.delta
