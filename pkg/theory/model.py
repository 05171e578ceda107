"""
Model - Parámetros del modelo, perfil de tasas, barreras y niveles derivados.

Este módulo:
1. Define ModelParams (ρ, β, Δ y el perfil de tasas) como modelo pydantic inmutable
2. Evalúa las tasas de nacimiento/muerte b(x), d(x) con b − d = βx
3. Calcula el borde L_A, la barrera fija o móvil Λ_A(s) y las ventanas l, K_A, H_A
4. Evalúa el peso z_A(x) = e^{ρx}Ai((2β)^{1/3}(L_A − x) + γ₁)1{x < L_A}
5. Reporta los diagnósticos de régimen (ρ³/β y estadísticos escalados de Z e Y)
"""

import logging
import math
import threading
from collections import OrderedDict
from enum import Enum
from typing import Any, Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator
from scipy.special import logsumexp

from theory.airy import ai, airy_zero, log_ai
from theory.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
RateFunction = Callable[[np.ndarray], np.ndarray]

VALIDATION_POINTS = 1000
RATE_RTOL = 1e-12
SELECTION_ADVISORY = 10.0
VALIDATION_CACHE_SIZE = 128


class RateProfileKind(str, Enum):
    """Tipo de perfil de tasas."""

    DEFAULT_LINEAR = "default_linear"
    CUSTOM = "custom"


class RateProfile(BaseModel):
    """
    Perfil de tasas b(x), d(x).

    default_linear: d = 1, b = 1 + βx para x ≥ -1/β; d = -βx, b = 0 debajo.
    custom: tabla (grid, birth, death) interpolada linealmente, o funciones
    adjuntas en proceso con from_callables (no serializables).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: RateProfileKind = Field(
        default=RateProfileKind.DEFAULT_LINEAR, description="Tipo de perfil"
    )
    grid: Optional[List[float]] = Field(
        default=None, description="Posiciones tabuladas (crecientes)"
    )
    birth: Optional[List[float]] = Field(default=None, description="b(x) en la grilla")
    death: Optional[List[float]] = Field(default=None, description="d(x) en la grilla")

    _birth_fn: Optional[RateFunction] = PrivateAttr(default=None)
    _death_fn: Optional[RateFunction] = PrivateAttr(default=None)

    @model_validator(mode="after")
    def _check_table(self) -> "RateProfile":
        if self.kind == RateProfileKind.DEFAULT_LINEAR:
            if self.grid is not None or self.birth is not None or self.death is not None:
                raise ValueError("default_linear no admite tablas de tasas")
            return self

        if self.grid is None and self.birth is None and self.death is None:
            # Perfil custom a completar con from_callables
            return self
        if self.grid is None or self.birth is None or self.death is None:
            raise ValueError("Un perfil custom tabulado requiere grid, birth y death")
        if not (len(self.grid) == len(self.birth) == len(self.death) >= 2):
            raise ValueError("grid, birth y death deben tener el mismo largo (≥ 2)")
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid debe ser estrictamente creciente")
        if min(self.birth) < 0 or min(self.death) < 0:
            raise ValueError("Las tasas tabuladas deben ser no negativas")
        return self

    @classmethod
    def from_callables(cls, birth: RateFunction, death: RateFunction) -> "RateProfile":
        """Perfil custom a partir de funciones vectorizadas b(x), d(x)."""
        profile = cls(kind=RateProfileKind.CUSTOM)
        profile._birth_fn = birth
        profile._death_fn = death
        return profile

    @property
    def is_callable(self) -> bool:
        return self._birth_fn is not None

    def evaluate(self, x: np.ndarray, beta: float) -> Tuple[np.ndarray, np.ndarray]:
        """Evalúa (b, d) sobre un array de posiciones."""
        if self.kind == RateProfileKind.DEFAULT_LINEAR:
            net = beta * x
            low = x < -1.0 / beta
            birth = np.where(low, 0.0, 1.0 + net)
            death = np.where(low, -net, 1.0)
            return birth, death

        if self._birth_fn is not None:
            birth = np.asarray(self._birth_fn(x), dtype=float)
            death = np.asarray(self._death_fn(x), dtype=float)
            return np.broadcast_to(birth, x.shape), np.broadcast_to(death, x.shape)

        if self.grid is None:
            raise ConfigurationError("Perfil custom sin tabla ni funciones de tasas")
        return np.interp(x, self.grid, self.birth), np.interp(x, self.grid, self.death)


class _ValidationCache:
    """Claves de perfiles ya validados, LRU acotado a maxsize entradas."""

    def __init__(self, maxsize: int):
        self.maxsize = maxsize
        self._keys: "OrderedDict[tuple, None]" = OrderedDict()
        self._lock = threading.Lock()

    def __contains__(self, key: Optional[tuple]) -> bool:
        if key is None:
            return False
        with self._lock:
            if key not in self._keys:
                return False
            self._keys.move_to_end(key)
            return True

    def __len__(self) -> int:
        return len(self._keys)

    def add(self, key: Optional[tuple]) -> None:
        if key is None:
            return
        with self._lock:
            self._keys[key] = None
            self._keys.move_to_end(key)
            while len(self._keys) > self.maxsize:
                self._keys.popitem(last=False)


_VALIDATED = _ValidationCache(VALIDATION_CACHE_SIZE)


def _validation_key(params: "ModelParams") -> Optional[tuple]:
    # la clave retiene las funciones: un id reciclado no puede colarse
    profile = params.rate_profile
    functions = (profile._birth_fn, profile._death_fn) if profile.is_callable else None
    key = (
        profile.kind,
        tuple(profile.grid or ()),
        tuple(profile.birth or ()),
        tuple(profile.death or ()),
        functions,
        params.beta,
        params.delta,
    )
    try:
        hash(key)
    except TypeError:
        return None
    return key


class ModelParams(BaseModel):
    """Parámetros (ρ, β, Δ) y perfil de tasas; todo lo demás deriva de aquí."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    rho: float = Field(..., gt=0, description="Magnitud del drift (espacio/tiempo)")
    beta: float = Field(..., gt=0, description="Pendiente de la tasa neta βx")
    delta: float = Field(default=0.5, gt=0, lt=1, description="Piso de tasas Δ")
    rate_profile: RateProfile = Field(
        default_factory=RateProfile, description="Perfil b(x), d(x)"
    )

    @property
    def edge_scale(self) -> float:
        """(2β)^{1/3}: escala espacial del borde."""
        return (2.0 * self.beta) ** (1.0 / 3.0)

    @property
    def selection_strength(self) -> float:
        """ρ³/β; el régimen asintótico requiere que sea grande."""
        return self.rho**3 / self.beta

    @property
    def bulk_variance(self) -> float:
        """ρ/β: varianza de la onda gaussiana en unidades de posición."""
        return self.rho / self.beta

    @property
    def peak_position(self) -> float:
        """ρ²/2β."""
        return self.rho**2 / (2.0 * self.beta)


def validate_params(params: ModelParams) -> None:
    """
    Valida el perfil de tasas en 10³ puntos de [-2/β, 2/β].

    Comprueba b − d = βx (relativo a la escala de las tasas), d ≥ Δ,
    b ≤ 1/Δ para x ≤ 1/β y no negatividad.

    Raises:
        ConfigurationError: Si alguna condición falla
    """
    beta, delta = params.beta, params.delta
    profile = params.rate_profile
    x = np.linspace(-2.0 / beta, 2.0 / beta, VALIDATION_POINTS)
    birth, death = profile.evaluate(x, beta)

    if not (np.all(np.isfinite(birth)) and np.all(np.isfinite(death))):
        raise ConfigurationError("El perfil de tasas produce valores no finitos")
    if np.any(birth < 0) or np.any(death < 0):
        raise ConfigurationError("El perfil de tasas produce tasas negativas")

    net = beta * x
    scale = np.maximum(np.abs(net), birth + death)
    mismatch = np.abs(birth - death - net) > RATE_RTOL * np.maximum(scale, 1e-300)
    if mismatch.any():
        bad = float(x[np.argmax(mismatch)])
        raise ConfigurationError(
            f"El perfil de tasas viola b − d = βx en x = {bad:.6g} "
            f"(b = {birth[np.argmax(mismatch)]:.6g}, d = {death[np.argmax(mismatch)]:.6g})"
        )

    if np.any(death < delta * (1 - RATE_RTOL)):
        bad = float(x[np.argmax(death < delta * (1 - RATE_RTOL))])
        raise ConfigurationError(f"d(x) < Δ = {delta} en x = {bad:.6g}")

    right = x <= 1.0 / beta
    if np.any(birth[right] > (1.0 / delta) * (1 + RATE_RTOL)):
        raise ConfigurationError(
            f"b(x) > 1/Δ = {1.0 / delta:.6g} para algún x ≤ 1/β "
            f"(max b = {float(birth[right].max()):.6g})"
        )

    _VALIDATED.add(_validation_key(params))
    logger.debug(f"Perfil de tasas {profile.kind.value} validado para β={beta}, Δ={delta}")


def rates(params: ModelParams, x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Tasas (b(x), d(x)).

    Args:
        params: Parámetros del modelo
        x: Posición escalar o array

    Returns:
        Tuple (b, d) con la forma de x

    Raises:
        ConfigurationError: Si el perfil no pasa la validación en grilla
    """
    profile = params.rate_profile
    if _validation_key(params) not in _VALIDATED:
        validate_params(params)

    arr = np.asarray(x, dtype=float)
    birth, death = profile.evaluate(np.atleast_1d(arr), params.beta)
    if arr.ndim == 0:
        return float(birth[0]), float(death[0])
    return birth.reshape(arr.shape), death.reshape(arr.shape)


def level(params: ModelParams, A: float) -> float:
    """L_A = ρ²/2β − (2β)^{-1/3}γ₁ − A/ρ."""
    return params.peak_position - airy_zero(1) / params.edge_scale - A / params.rho


# Barreras


class BarrierKind(str, Enum):
    """Tipo de barrera absorbente."""

    NONE = "none"
    FIXED = "fixed"
    MOVING = "moving"


class Barrier(BaseModel):
    """Barrera absorbente: ninguna, fija en L_A o móvil Λ_A(s)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: BarrierKind = Field(default=BarrierKind.NONE, description="Tipo de barrera")
    A: float = Field(default=0.0, description="Desplazamiento A del nivel L_A")


def barrier_offset(barrier: Barrier, params: ModelParams, s: float) -> float:
    """Δ_A(s) = -(2A/ρ)(e^{2βs/ρ} − 1) para barreras móviles, 0 si no."""
    if s < 0:
        raise DomainError(f"El tiempo de barrera debe ser ≥ 0, recibido {s}")
    if barrier.kind != BarrierKind.MOVING:
        return 0.0
    return -(2.0 * barrier.A / params.rho) * math.expm1(2.0 * params.beta * s / params.rho)


def barrier_level(barrier: Barrier, params: ModelParams, s: float) -> float:
    """
    Nivel de absorción en el tiempo s.

    Returns:
        +inf (none), L_A (fixed) o Λ_A(s) (moving)

    Raises:
        DomainError: Si s < 0
    """
    if s < 0:
        raise DomainError(f"El tiempo de barrera debe ser ≥ 0, recibido {s}")
    if barrier.kind == BarrierKind.NONE:
        return math.inf
    return level(params, barrier.A) + barrier_offset(barrier, params, s)


def windows(params: ModelParams, A: float, t: float) -> Tuple[float, float, float]:
    """
    Ventanas (l, K_A, H_A) en el tiempo t.

    l = βt²/33, K_A = L_A − l/2, H_A = L_A − βt²/9.
    """
    if t < 0:
        raise DomainError(f"windows requiere t ≥ 0, recibido {t}")
    edge = level(params, A)
    span = params.beta * t * t
    small = span / 33.0
    return small, edge - small / 2.0, edge - span / 9.0


# Pesos


def alpha(params: ModelParams, x: ArrayLike) -> ArrayLike:
    """α(x) = Ai((2β)^{1/3}x + γ₁)."""
    return ai(params.edge_scale * np.asarray(x, dtype=float) + airy_zero(1))


def log_z_weight(params: ModelParams, A: float, x: ArrayLike) -> ArrayLike:
    """log z_A(x); -inf para x ≥ L_A."""
    arr = np.asarray(x, dtype=float)
    edge = level(params, A)
    argument = params.edge_scale * (edge - arr) + airy_zero(1)
    out = params.rho * arr + np.where(arr < edge, log_ai(argument), -np.inf)
    if arr.ndim == 0:
        return float(out)
    return out


def z_weight(params: ModelParams, A: float, x: ArrayLike) -> ArrayLike:
    """
    z_A(x) = e^{ρx}·Ai((2β)^{1/3}(L_A − x) + γ₁)·1{x < L_A}.

    Estrictamente positivo debajo de L_A y exactamente 0 en [L_A, ∞).
    """
    out = np.exp(log_z_weight(params, A, x))
    if np.ndim(out) == 0:
        return float(out)
    return out


# Diagnósticos


class AssumptionReport(BaseModel):
    """Diagnósticos de régimen; solo informativos."""

    selection_strength: float = Field(..., description="ρ³/β")
    rho: float = Field(..., description="ρ")
    num_particles: int = Field(..., description="N(0)")
    zasm_statistic: float = Field(..., description="ρ³β^{-1/3}e^{-ρL}Z(0)")
    yasm_statistic: float = Field(..., description="ρ²e^{-ρL}Y(0)")
    degenerate: bool = Field(..., description="Estado vacío")
    advisories: List[str] = Field(default_factory=list, description="Avisos")


def _positions_of(state: Any) -> np.ndarray:
    positions = getattr(state, "positions", state)
    return np.asarray(positions, dtype=float).ravel()


def assumption_report(params: ModelParams, state: Any) -> AssumptionReport:
    """
    Reporta ρ³/β, ρ y los estadísticos escalados de Z(0) e Y(0).

    Args:
        params: Parámetros del modelo
        state: Estado con atributo positions, o array de posiciones

    Returns:
        AssumptionReport (nunca lanza por régimen)
    """
    positions = _positions_of(state)
    rho, beta = params.rho, params.beta
    edge = level(params, 0.0)
    advisories: List[str] = []

    if params.selection_strength < SELECTION_ADVISORY:
        advisories.append(
            f"ρ³/β = {params.selection_strength:.4g} < {SELECTION_ADVISORY}: "
            f"régimen lejos del asintótico"
        )

    degenerate = positions.size == 0
    if degenerate:
        zasm = 0.0
        yasm = 0.0
        advisories.append("Estado vacío: Z(0) = Y(0) = 0")
    else:
        log_z = logsumexp(log_z_weight(params, 0.0, positions))
        log_y = logsumexp(rho * positions)
        zasm = math.exp(3 * math.log(rho) - math.log(beta) / 3.0 - rho * edge + log_z)
        yasm = math.exp(2 * math.log(rho) - rho * edge + log_y)
        if not 0.1 <= zasm <= 10.0:
            advisories.append(f"Estadístico de Z fuera de [0.1, 10]: {zasm:.4g}")

    for advisory in advisories:
        logger.warning(advisory)

    return AssumptionReport(
        selection_strength=params.selection_strength,
        rho=rho,
        num_particles=int(positions.size),
        zasm_statistic=zasm,
        yasm_statistic=yasm,
        degenerate=degenerate,
        advisories=advisories,
    )
