"""
Population - Estado de la población y registro de eventos.

Este módulo:
1. Define PopulationState como struct-of-arrays (ids, padres, posiciones, réplica)
2. Define EventLog: absorciones, nacimientos, muertes y máximo de posición por réplica
3. Calcula las sumas por réplica (N, log Y, log Z_A, extremos) en dominio log

Un estado puede contener varias réplicas de un mismo bloque; la columna
replica indica a cuál pertenece cada partícula.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from theory.model import ModelParams, log_z_weight

logger = logging.getLogger(__name__)

NO_PARENT = -1


class Particle(NamedTuple):
    """Vista de una partícula."""

    id: int
    parent_id: Optional[int]
    position: float


@dataclass
class PopulationState:
    """
    Población en un tiempo dado.

    Los ids son únicos dentro del estado. En un nacimiento el padre conserva
    su id y el descendiente recibe uno nuevo con parent_id = id del padre.
    """

    time: float
    ids: np.ndarray
    parent_ids: np.ndarray
    positions: np.ndarray
    replica: np.ndarray
    num_replicas: int = 1
    next_id: int = 0

    @classmethod
    def empty(cls, num_replicas: int = 1, time: float = 0.0) -> "PopulationState":
        return cls(
            time=time,
            ids=np.empty(0, dtype=np.int64),
            parent_ids=np.empty(0, dtype=np.int64),
            positions=np.empty(0),
            replica=np.empty(0, dtype=np.int64),
            num_replicas=num_replicas,
        )

    @classmethod
    def from_positions(
        cls,
        positions: Sequence[float],
        replica: Optional[Sequence[int]] = None,
        num_replicas: int = 1,
        time: float = 0.0,
    ) -> "PopulationState":
        """Fundadores (sin padre) en las posiciones dadas."""
        pos = np.asarray(positions, dtype=float).ravel()
        tags = (
            np.zeros(pos.size, dtype=np.int64)
            if replica is None
            else np.asarray(replica, dtype=np.int64).ravel()
        )
        return cls(
            time=time,
            ids=np.arange(pos.size, dtype=np.int64),
            parent_ids=np.full(pos.size, NO_PARENT, dtype=np.int64),
            positions=pos.copy(),
            replica=tags,
            num_replicas=num_replicas,
            next_id=pos.size,
        )

    @property
    def size(self) -> int:
        return int(self.positions.size)

    def __len__(self) -> int:
        return self.size

    def particles(self) -> Iterator[Particle]:
        for pid, parent, pos in zip(self.ids, self.parent_ids, self.positions):
            yield Particle(int(pid), None if parent == NO_PARENT else int(parent), float(pos))

    def copy(self) -> "PopulationState":
        return PopulationState(
            time=self.time,
            ids=self.ids.copy(),
            parent_ids=self.parent_ids.copy(),
            positions=self.positions.copy(),
            replica=self.replica.copy(),
            num_replicas=self.num_replicas,
            next_id=self.next_id,
        )

    def select(self, mask: np.ndarray) -> "PopulationState":
        """Sub-estado con las partículas de mask (mismo tiempo y réplicas)."""
        return PopulationState(
            time=self.time,
            ids=self.ids[mask],
            parent_ids=self.parent_ids[mask],
            positions=self.positions[mask],
            replica=self.replica[mask],
            num_replicas=self.num_replicas,
            next_id=self.next_id,
        )

    def for_replica(self, replica: int) -> "PopulationState":
        sub = self.select(self.replica == replica)
        sub.replica = np.zeros(sub.size, dtype=np.int64)
        sub.num_replicas = 1
        return sub

    def counts(self) -> np.ndarray:
        """N por réplica."""
        return np.bincount(self.replica, minlength=self.num_replicas)

    def surviving_replicas(self) -> np.ndarray:
        return np.flatnonzero(self.counts() > 0)

    @classmethod
    def concat(cls, states: Sequence["PopulationState"]) -> "PopulationState":
        """
        Une estados del mismo tiempo desplazando ids y réplicas.

        Se usa para agregar bloques en orden; la réplica k del estado i pasa
        a ser offset_i + k.
        """
        if not states:
            return cls.empty(0)
        ids, parents, positions, replica = [], [], [], []
        id_offset = 0
        rep_offset = 0
        for state in states:
            ids.append(state.ids + id_offset)
            parents.append(np.where(state.parent_ids == NO_PARENT, NO_PARENT, state.parent_ids + id_offset))
            positions.append(state.positions)
            replica.append(state.replica + rep_offset)
            id_offset += state.next_id
            rep_offset += state.num_replicas
        return cls(
            time=states[0].time,
            ids=np.concatenate(ids),
            parent_ids=np.concatenate(parents),
            positions=np.concatenate(positions),
            replica=np.concatenate(replica),
            num_replicas=rep_offset,
            next_id=id_offset,
        )


@dataclass
class ReplicaSums:
    """Sumas por réplica de un estado; arrays de largo num_replicas."""

    time: float
    counts: np.ndarray
    log_y: np.ndarray
    log_z: np.ndarray  # (num_replicas, len(A_list))
    min_position: np.ndarray
    max_position: np.ndarray


def _grouped_logsumexp(values: np.ndarray, groups: np.ndarray, num_groups: int) -> np.ndarray:
    out = np.full(num_groups, -np.inf)
    if values.size == 0:
        return out
    peak = np.full(num_groups, -np.inf)
    np.maximum.at(peak, groups, values)
    safe_peak = np.where(np.isfinite(peak), peak, 0.0)
    with np.errstate(under="ignore"):
        scaled = np.exp(values - safe_peak[groups])
    totals = np.bincount(groups, weights=scaled, minlength=num_groups)
    with np.errstate(divide="ignore"):
        out = np.where(totals > 0, safe_peak + np.log(totals), -np.inf)
    return out


def replica_sums(
    state: PopulationState, params: ModelParams, A_list: Sequence[float] = (0.0,)
) -> ReplicaSums:
    """
    N, log Y = log Σe^{ρX}, log Z_A y extremos por réplica.

    Réplicas vacías dan N = 0, log Y = log Z = -inf y extremos NaN.
    """
    R = state.num_replicas
    tags = state.replica
    pos = state.positions

    log_z = np.empty((R, len(A_list)))
    for j, A in enumerate(A_list):
        log_z[:, j] = _grouped_logsumexp(np.atleast_1d(log_z_weight(params, A, pos)), tags, R)

    lo = np.full(R, np.inf)
    hi = np.full(R, -np.inf)
    np.minimum.at(lo, tags, pos)
    np.maximum.at(hi, tags, pos)
    counts = state.counts()
    empty = counts == 0
    lo[empty] = np.nan
    hi[empty] = np.nan

    return ReplicaSums(
        time=state.time,
        counts=counts,
        log_y=_grouped_logsumexp(params.rho * pos, tags, R),
        log_z=log_z,
        min_position=lo,
        max_position=hi,
    )


def total_log_sum(log_values: np.ndarray) -> float:
    """log Σ exp(log_values), -inf si todos son -inf."""
    if log_values.size == 0 or not np.any(np.isfinite(log_values)):
        return -np.inf
    return float(logsumexp(log_values))


@dataclass
class EventLog:
    """
    Registro de eventos de una evolución.

    Absorciones como arrays paralelos (tiempo, posición, id, réplica); conteos
    de nacimientos y muertes y máximo de posición observado por réplica.
    """

    num_replicas: int = 1
    absorption_time: np.ndarray = field(default_factory=lambda: np.empty(0))
    absorption_position: np.ndarray = field(default_factory=lambda: np.empty(0))
    absorption_id: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    absorption_replica: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    birth_counts: Optional[np.ndarray] = None
    death_counts: Optional[np.ndarray] = None
    max_positions: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.birth_counts is None:
            self.birth_counts = np.zeros(self.num_replicas, dtype=np.int64)
        if self.death_counts is None:
            self.death_counts = np.zeros(self.num_replicas, dtype=np.int64)
        if self.max_positions is None:
            self.max_positions = np.full(self.num_replicas, -np.inf)
        self._pending: List[tuple] = []

    def _flush(self) -> None:
        if not self._pending:
            return
        times, positions, ids, replicas = zip(*self._pending)
        self.absorption_time = np.concatenate([self.absorption_time, *times])
        self.absorption_position = np.concatenate([self.absorption_position, *positions])
        self.absorption_id = np.concatenate([self.absorption_id, *ids])
        self.absorption_replica = np.concatenate([self.absorption_replica, *replicas])
        self._pending = []

    def record_absorptions(
        self, time: float, positions: np.ndarray, ids: np.ndarray, replicas: np.ndarray
    ) -> None:
        if positions.size == 0:
            return
        self._pending.append(
            (np.full(positions.size, time), positions.copy(), ids.copy(), replicas.copy())
        )

    def record_births(self, replicas: np.ndarray) -> None:
        self.birth_counts += np.bincount(replicas, minlength=self.num_replicas)

    def record_deaths(self, replicas: np.ndarray) -> None:
        self.death_counts += np.bincount(replicas, minlength=self.num_replicas)

    def observe(self, positions: np.ndarray, replicas: np.ndarray) -> None:
        np.maximum.at(self.max_positions, replicas, positions)

    @property
    def absorptions(self) -> Dict[str, np.ndarray]:
        self._flush()
        return {
            "time": self.absorption_time,
            "position": self.absorption_position,
            "id": self.absorption_id,
            "replica": self.absorption_replica,
        }

    @property
    def num_absorptions(self) -> int:
        self._flush()
        return int(self.absorption_time.size)

    @property
    def births(self) -> int:
        return int(self.birth_counts.sum())

    @property
    def deaths(self) -> int:
        return int(self.death_counts.sum())

    @property
    def max_position_seen(self) -> float:
        if self.max_positions.size == 0:
            return -np.inf
        return float(self.max_positions.max())

    def absorption_counts(self, u: float, v: float) -> np.ndarray:
        """Absorciones con tiempo en [u, v], por réplica."""
        self._flush()
        inside = (self.absorption_time >= u) & (self.absorption_time <= v)
        return np.bincount(self.absorption_replica[inside], minlength=self.num_replicas)

    def digest(self, edges: Sequence[float]) -> Dict[str, object]:
        """
        Resumen serializable con histograma de absorciones por tiempo.

        Args:
            edges: Bordes crecientes de los bins temporales

        Returns:
            Dict listo para JSON
        """
        self._flush()
        counts, _ = np.histogram(self.absorption_time, bins=np.asarray(edges, dtype=float))
        finite_max = self.max_position_seen
        return {
            "births": self.births,
            "deaths": self.deaths,
            "absorptions": self.num_absorptions,
            "max_position_seen": finite_max if np.isfinite(finite_max) else None,
            "histogram": {
                "edges": [float(e) for e in edges],
                "counts": [int(c) for c in counts],
            },
        }

    @classmethod
    def concat(cls, logs: Sequence["EventLog"]) -> "EventLog":
        """Une logs de bloques desplazando la réplica (orden de bloques)."""
        merged = cls(num_replicas=sum(log.num_replicas for log in logs))
        offset = 0
        for log in logs:
            data = log.absorptions
            merged._pending.append(
                (data["time"], data["position"], data["id"], data["replica"] + offset)
            )
            sl = slice(offset, offset + log.num_replicas)
            merged.birth_counts[sl] = log.birth_counts
            merged.death_counts[sl] = log.death_counts
            merged.max_positions[sl] = log.max_positions
            offset += log.num_replicas
        merged._flush()
        return merged

    def for_replica(self, replica: int) -> "EventLog":
        self._flush()
        mask = self.absorption_replica == replica
        return EventLog(
            num_replicas=1,
            absorption_time=self.absorption_time[mask],
            absorption_position=self.absorption_position[mask],
            absorption_id=self.absorption_id[mask],
            absorption_replica=np.zeros(int(mask.sum()), dtype=np.int64),
            birth_counts=self.birth_counts[replica : replica + 1].copy(),
            death_counts=self.death_counts[replica : replica + 1].copy(),
            max_positions=self.max_positions[replica : replica + 1].copy(),
        )
