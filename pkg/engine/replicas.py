"""
Replicas - Ejecución de réplicas en bloques con streams deterministas.

Este módulo:
1. Define la condición inicial (puntual o nube del borde) y el RunSpec de una corrida
2. Da a cada réplica su propio stream RNG (stream = id global de réplica)
3. Agrupa réplicas en bloques de trabajo, los ejecuta en un pool de procesos
   y agrega en orden de réplica
4. Etiqueta los errores de capacidad y numéricos con la réplica afectada

El resultado depende solo de (spec, master_seed): ni del número de workers
ni del tamaño de bloque. Cada réplica conserva su trayectoria al cambiar
el número total de réplicas.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from engine.population import EventLog, PopulationState, ReplicaSums, replica_sums
from engine.rng import RngSpec
from engine.simulator import StepPolicy, evolve, init_edge_cloud, init_point
from theory.errors import CapacityError, NumericError, UsageError
from theory.model import Barrier, ModelParams, level

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_SIZE = 500
TIME_MATCH_TOL = 1e-9


class InitKind(str, Enum):
    """Tipo de condición inicial."""

    POINT = "point"
    EDGE_CLOUD = "edge_cloud"


class InitialCondition(BaseModel):
    """
    Partícula única en x (o en L − edge_offset), o nube de ⌈e^{ρu}/(uρ³)⌉
    partículas en L − u.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: InitKind = Field(default=InitKind.POINT, description="point | edge_cloud")
    x: Optional[float] = Field(default=None, description="Posición inicial (point)")
    edge_offset: Optional[float] = Field(
        default=None, description="Distancia bajo el borde L = L_0 (point, alternativa a x)"
    )
    u: Optional[float] = Field(default=None, gt=0, description="Distancia al borde (edge_cloud)")

    @model_validator(mode="after")
    def _check_kind(self) -> "InitialCondition":
        if self.kind == InitKind.POINT and (self.x is None) == (self.edge_offset is None):
            raise ValueError("init point requiere exactamente uno de x o edge_offset")
        if self.kind == InitKind.EDGE_CLOUD and self.u is None:
            raise ValueError("init edge_cloud requiere u")
        return self

    def position(self, params: ModelParams) -> float:
        """Posición inicial de una condición puntual."""
        if self.kind != InitKind.POINT:
            raise UsageError("La nube del borde no tiene una posición inicial única")
        if self.x is not None:
            return float(self.x)
        return level(params, 0.0) - self.edge_offset

    def build(self, params: ModelParams, budget: int, replicas: int) -> PopulationState:
        if self.kind == InitKind.POINT:
            return init_point(self.position(params), replicas)
        return init_edge_cloud(params, self.u, budget=budget, replicas=replicas)


class RunSpec(BaseModel):
    """Todo lo que define una corrida Monte Carlo, salvo la semilla."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    params: ModelParams
    init: InitialCondition
    barrier: Barrier = Field(default_factory=Barrier)
    horizon: float = Field(..., ge=0, description="Tiempo final")
    snapshot_times: List[float] = Field(default_factory=list, description="Tiempos de snapshot")
    replicas: int = Field(..., ge=0, description="Número de réplicas")
    step: StepPolicy = Field(default_factory=StepPolicy)
    A_list: List[float] = Field(default_factory=lambda: [0.0], description="Valores de A para Z_A")
    record_particles: bool = Field(default=False, description="Guardar partículas por snapshot")

    @field_validator("snapshot_times")
    @classmethod
    def _sorted_times(cls, value: List[float]) -> List[float]:
        if any(b < a for a, b in zip(value, value[1:])):
            raise ValueError(f"snapshot_times debe estar ordenado: {value}")
        return value

    @model_validator(mode="after")
    def _times_in_range(self) -> "RunSpec":
        bad = [t for t in self.snapshot_times if t < 0 or t > self.horizon]
        if bad:
            raise ValueError(f"snapshot_times fuera de [0, {self.horizon}]: {bad}")
        return self

    @property
    def times(self) -> List[float]:
        """Snapshots más el horizonte, ordenados y sin repetir."""
        return sorted(set(self.snapshot_times) | {self.horizon})


@dataclass
class Ensemble:
    """
    Resultado agregado de run_replicas.

    Arrays indexados [réplica, tiempo] (log_z además por A), en orden global
    de réplica. states solo existe con record_particles.
    """

    spec: RunSpec
    times: np.ndarray
    counts: np.ndarray
    log_y: np.ndarray
    log_z: np.ndarray
    min_position: np.ndarray
    max_position: np.ndarray
    log: EventLog
    states: Optional[List[PopulationState]] = None
    blocks: int = 0

    @classmethod
    def empty(cls, spec: RunSpec) -> "Ensemble":
        T = len(spec.times)
        return cls(
            spec=spec,
            times=np.asarray(spec.times, dtype=float),
            counts=np.zeros((0, T), dtype=np.int64),
            log_y=np.zeros((0, T)),
            log_z=np.zeros((0, T, len(spec.A_list))),
            min_position=np.zeros((0, T)),
            max_position=np.zeros((0, T)),
            log=EventLog(num_replicas=0),
            states=(
                [PopulationState.empty(0, t) for t in spec.times]
                if spec.record_particles
                else None
            ),
        )

    @property
    def num_replicas(self) -> int:
        return int(self.counts.shape[0])

    def time_index(self, t: float) -> int:
        """Índice del snapshot t; UsageError si no fue registrado."""
        hits = np.flatnonzero(np.abs(self.times - t) <= TIME_MATCH_TOL * max(1.0, abs(t)))
        if hits.size == 0:
            raise UsageError(f"t = {t} no es un snapshot del ensemble ({self.times.tolist()})")
        return int(hits[0])

    def a_index(self, A: float) -> int:
        for j, value in enumerate(self.spec.A_list):
            if abs(value - A) <= 1e-12:
                return j
        raise UsageError(f"A = {A} no está en A_list {self.spec.A_list}")

    def z_values(self, A: float, t: float) -> np.ndarray:
        """Z_A(t) por réplica (0 para réplicas extintas)."""
        return np.exp(self.log_z[:, self.time_index(t), self.a_index(A)])

    def counts_at(self, t: float) -> np.ndarray:
        return self.counts[:, self.time_index(t)]

    def state_at(self, t: float) -> PopulationState:
        if self.states is None:
            raise UsageError("El ensemble no guardó partículas (record_particles = false)")
        return self.states[self.time_index(t)]

    def replica_digests(self, edges: Sequence[float]) -> List[Dict[str, object]]:
        return [self.log.for_replica(r).digest(edges) for r in range(self.num_replicas)]


@dataclass
class _BlockResult:
    counts: np.ndarray
    log_y: np.ndarray
    log_z: np.ndarray
    min_position: np.ndarray
    max_position: np.ndarray
    log: EventLog
    states: Optional[List[PopulationState]]


def _run_replica(
    spec: RunSpec, rng_spec: RngSpec, replica: int
) -> Tuple[List[ReplicaSums], EventLog, List[PopulationState]]:
    """Evoluciona una réplica con su propio stream `replica`."""
    rng = rng_spec.generator(replica)
    state = spec.init.build(spec.params, spec.step.particle_budget, 1)
    log: Optional[EventLog] = None
    sums, states = [], []
    for t in spec.times:
        state, log = evolve(state, spec.params, spec.barrier, t, spec.step, rng, log=log)
        sums.append(replica_sums(state, spec.params, spec.A_list))
        if spec.record_particles:
            states.append(state.copy())
    return sums, log, states


def _run_block(spec: RunSpec, rng_spec: RngSpec, start: int, count: int) -> _BlockResult:
    """Evoluciona las réplicas start..start+count-1; el bloque es solo la unidad de trabajo."""
    per_replica = []
    for replica in range(start, start + count):
        try:
            per_replica.append(_run_replica(spec, rng_spec, replica))
        except CapacityError as exc:
            raise exc.with_replica(replica) from exc
        except NumericError as exc:
            raise NumericError(f"réplica {replica}: {exc}") from exc

    def stacked(field: str) -> np.ndarray:
        # [réplica, tiempo, ...]
        return np.concatenate(
            [np.stack([getattr(s, field) for s in sums], axis=1) for sums, _, _ in per_replica]
        )

    states = None
    if spec.record_particles:
        states = [
            PopulationState.concat([replica_states[i] for _, _, replica_states in per_replica])
            for i in range(len(spec.times))
        ]

    return _BlockResult(
        counts=stacked("counts"),
        log_y=stacked("log_y"),
        log_z=stacked("log_z"),
        min_position=stacked("min_position"),
        max_position=stacked("max_position"),
        log=EventLog.concat([log for _, log, _ in per_replica]),
        states=states,
    )


def _run_block_packed(args: tuple) -> _BlockResult:
    return _run_block(*args)


def run_replicas(
    spec: RunSpec,
    rng_spec: RngSpec,
    threads: Optional[int] = None,
    block_size: int = DEFAULT_BLOCK_SIZE,
) -> Ensemble:
    """
    Ejecuta spec.replicas réplicas en bloques de block_size.

    Args:
        spec: Definición de la corrida
        rng_spec: Semilla maestra; la réplica r usa el stream r
        threads: Máximo de procesos (None → os.cpu_count())
        block_size: Réplicas por unidad de trabajo del pool (no afecta los resultados)

    Returns:
        Ensemble agregado en orden global de réplica

    Raises:
        CapacityError: Con el id global de la réplica afectada
        NumericError: Con el id de la réplica afectada
    """
    if spec.replicas == 0:
        logger.info("run_replicas: 0 réplicas, ensemble vacío")
        return Ensemble.empty(spec)
    if block_size < 1:
        raise UsageError(f"block_size debe ser ≥ 1, recibido {block_size}")

    num_blocks = math.ceil(spec.replicas / block_size)
    jobs = [
        (spec, rng_spec, b * block_size, min(block_size, spec.replicas - b * block_size))
        for b in range(num_blocks)
    ]

    workers = min(threads or os.cpu_count() or 1, num_blocks)
    if spec.params.rate_profile.is_callable and workers > 1:
        logger.info("Perfil de tasas con callables: ejecución secuencial")
        workers = 1

    logger.info(
        f"run_replicas: {spec.replicas} réplicas en {num_blocks} bloques "
        f"(block_size={block_size}, workers={workers}, seed={rng_spec.master_seed})"
    )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_run_block_packed, jobs))
    else:
        results = [_run_block_packed(job) for job in jobs]

    for b, result in enumerate(results):
        logger.debug(f"Bloque {b}: N final total = {int(result.counts[:, -1].sum())}")

    states = None
    if spec.record_particles:
        states = [
            PopulationState.concat([r.states[i] for r in results]) for i in range(len(spec.times))
        ]

    return Ensemble(
        spec=spec,
        times=np.asarray(spec.times, dtype=float),
        counts=np.concatenate([r.counts for r in results]),
        log_y=np.concatenate([r.log_y for r in results]),
        log_z=np.concatenate([r.log_z for r in results]),
        min_position=np.concatenate([r.min_position for r in results]),
        max_position=np.concatenate([r.max_position for r in results]),
        log=EventLog.concat([r.log for r in results]),
        states=states,
        blocks=num_blocks,
    )
