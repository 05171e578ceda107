"""
Measures - Medidas empíricas ponderadas y distancias a leyes de referencia.

Este módulo:
1. Define EmpiricalMeasure (átomos con pesos ≥ 0) y su agregación entre réplicas
2. Define las leyes de referencia: normal estándar y ley del borde de Airy
3. Calcula la distancia KS (sobre átomos y 10³ cuantiles) y W1 exacta por tramos
4. Calcula media y varianza muestrales ponderadas
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import special

from theory.airy import edge_cdf, edge_mean, edge_partial_mean, edge_ppf
from theory.errors import DomainError

logger = logging.getLogger(__name__)

KS_QUANTILES = 1000


@dataclass(frozen=True)
class EmpiricalMeasure:
    """
    Átomos (location, weight) ordenados por location.

    Átomos repetidos se conservan; la CDF los acumula.
    """

    locations: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_atoms(
        cls, locations: Sequence[float], weights: Optional[Sequence[float]] = None
    ) -> "EmpiricalMeasure":
        loc = np.asarray(locations, dtype=float).ravel()
        w = np.ones(loc.size) if weights is None else np.asarray(weights, dtype=float).ravel()
        if w.shape != loc.shape:
            raise DomainError(f"locations ({loc.size}) y weights ({w.size}) difieren en largo")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DomainError("Los pesos deben ser finitos y ≥ 0")
        order = np.argsort(loc, kind="stable")
        return cls(locations=loc[order], weights=w[order])

    @classmethod
    def point_mass(cls, location: float = 0.0) -> "EmpiricalMeasure":
        return cls(locations=np.array([float(location)]), weights=np.array([1.0]))

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @property
    def size(self) -> int:
        return int(self.locations.size)

    def normalized(self) -> "EmpiricalMeasure":
        """Vista de probabilidad; DomainError si el peso total es 0."""
        total = self.total_weight
        if total <= 0:
            raise DomainError("Medida con peso total 0 no se puede normalizar")
        return EmpiricalMeasure(locations=self.locations, weights=self.weights / total)

    def _steps(self) -> Tuple[np.ndarray, np.ndarray]:
        """Átomos distintos y CDF normalizada en cada uno."""
        measure = self.normalized()
        unique, inverse = np.unique(measure.locations, return_inverse=True)
        mass = np.bincount(inverse, weights=measure.weights)
        return unique, np.minimum(np.cumsum(mass), 1.0)

    def cdf(self, x: np.ndarray) -> np.ndarray:
        """F(x) = masa en (-∞, x], continua por derecha."""
        unique, cum = self._steps()
        idx = np.searchsorted(unique, np.asarray(x, dtype=float), side="right")
        return np.concatenate([[0.0], cum])[idx]

    @classmethod
    def pool(cls, measures: Sequence["EmpiricalMeasure"]) -> "EmpiricalMeasure":
        """
        Mezcla con peso 1/k por medida (cada una normalizada).

        Medidas de peso 0 se descartan.
        """
        usable = [m.normalized() for m in measures if m.total_weight > 0]
        if not usable:
            raise DomainError("No hay medidas con peso positivo para agregar")
        share = 1.0 / len(usable)
        return cls.from_atoms(
            np.concatenate([m.locations for m in usable]),
            np.concatenate([m.weights * share for m in usable]),
        )


# Leyes de referencia


class ReferenceLaw(Protocol):
    name: str

    def cdf(self, x: np.ndarray) -> np.ndarray: ...

    def ppf(self, p: np.ndarray) -> np.ndarray: ...

    def partial_mean(self, x: np.ndarray) -> np.ndarray: ...

    def mean(self) -> float: ...


class StandardNormal:
    """Normal estándar μ."""

    name = "std_normal"

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return special.ndtr(x)

    def ppf(self, p: np.ndarray) -> np.ndarray:
        return special.ndtri(p)

    def partial_mean(self, x: np.ndarray) -> np.ndarray:
        """∫_{-∞}^x s φ(s) ds = -φ(x)."""
        x = np.asarray(x, dtype=float)
        return -np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)

    def mean(self) -> float:
        return 0.0


class AiryEdgeLaw:
    """Ley ν con densidad h(y) ∝ Ai(y + γ₁) en (0, ∞)."""

    name = "airy_edge"

    def cdf(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(edge_cdf(np.asarray(x, dtype=float)))

    def ppf(self, p: np.ndarray) -> np.ndarray:
        return np.asarray(edge_ppf(np.asarray(p, dtype=float)))

    def partial_mean(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(edge_partial_mean(np.asarray(x, dtype=float)))

    def mean(self) -> float:
        return edge_mean()


class Metric(str, Enum):
    KS = "ks"
    WASSERSTEIN1 = "wasserstein1"


REFERENCES = {"std_normal": StandardNormal(), "airy_edge": AiryEdgeLaw()}


def _reference(reference) -> ReferenceLaw:
    if isinstance(reference, str):
        try:
            return REFERENCES[reference]
        except KeyError:
            raise DomainError(f"Ley de referencia desconocida: {reference}") from None
    return reference


def _ks(measure: EmpiricalMeasure, law: ReferenceLaw) -> float:
    unique, cum = measure._steps()
    ref = law.cdf(unique)
    below = np.concatenate([[0.0], cum[:-1]])
    atoms = max(np.max(np.abs(cum - ref)), np.max(np.abs(below - ref)))

    probs = (np.arange(KS_QUANTILES) + 0.5) / KS_QUANTILES
    quantiles = law.ppf(probs)
    grid = np.max(np.abs(measure.cdf(quantiles) - probs))
    return float(max(atoms, grid))


def _integral_cdf(law: ReferenceLaw, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """∫_a^b G(x) dx = bG(b) − aG(a) − (M(b) − M(a)), M media parcial."""
    return b * law.cdf(b) - a * law.cdf(a) - (law.partial_mean(b) - law.partial_mean(a))


def _wasserstein1(measure: EmpiricalMeasure, law: ReferenceLaw) -> float:
    unique, cum = measure._steps()
    first, last = unique[0], unique[-1]

    # (-∞, a₁): F = 0
    left = first * law.cdf(first) - law.partial_mean(first)
    # (a_n, ∞): F = 1
    right = (law.mean() - law.partial_mean(last)) - last * (1.0 - law.cdf(last))

    a, b, level = unique[:-1], unique[1:], cum[:-1]
    with np.errstate(invalid="ignore"):
        cross = np.clip(law.ppf(np.clip(level, 0.0, 1.0)), a, b)
    cross = np.where(np.isnan(cross), a, cross)
    under = level * (cross - a) - _integral_cdf(law, a, cross)
    over = _integral_cdf(law, cross, b) - level * (b - cross)
    inner = float(np.sum(under + over))
    return float(max(left, 0.0) + max(right, 0.0) + inner)


def distance(measure: EmpiricalMeasure, reference, metric: str = "ks") -> float:
    """
    Distancia entre la medida normalizada y una ley de referencia.

    Args:
        measure: Medida no vacía
        reference: "std_normal", "airy_edge" o un objeto ReferenceLaw
        metric: "ks" o "wasserstein1"

    Returns:
        Distancia ≥ 0

    Raises:
        DomainError: Medida vacía, referencia o métrica desconocida
    """
    if measure.size == 0 or measure.total_weight <= 0:
        raise DomainError("distance requiere una medida no vacía")
    law = _reference(reference)
    try:
        kind = Metric(metric)
    except ValueError:
        raise DomainError(f"Métrica desconocida: {metric}") from None

    value = _ks(measure, law) if kind == Metric.KS else _wasserstein1(measure, law)
    logger.debug(f"distance({law.name}, {kind.value}) = {value:.6g} sobre {measure.size} átomos")
    return max(value, 0.0)


def sample_moments(measure: EmpiricalMeasure) -> Tuple[float, float]:
    """(media, varianza) de la medida normalizada."""
    probs = measure.normalized().weights
    mean = float(np.dot(probs, measure.locations))
    variance = float(np.dot(probs, (measure.locations - mean) ** 2))
    return mean, variance
