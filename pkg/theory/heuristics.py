"""
Heuristics - Cálculo de grandes desviaciones y correspondencia con el modelo discreto.

Este módulo:
1. Construye la trayectoria óptima f_z(u) de un ancestro que llega a z en el tiempo T
2. Evalúa el exponente g(z), su aproximación gaussiana y la integral de acción
3. Mapea (N, μ, s) del modelo discreto a (β, ρ) por bisección sobre log N
4. Resume la onda viajera: velocidad, varianzas y escalas del borde
"""

import logging
import math
from dataclasses import dataclass
from typing import List

import numpy as np
from pydantic import BaseModel, Field
from scipy import optimize

from theory.airy import airy_zero
from theory.errors import DomainError, NumericError
from theory.model import ModelParams, level
from theory.quadrature import adaptive_quad

logger = logging.getLogger(__name__)

RHO_BRACKET = (1e-8, 1e3)
BISECT_XTOL = 1e-12


def _check_z(params: ModelParams, z: float) -> float:
    gap = params.peak_position - z
    if gap < 0:
        raise DomainError(f"z = {z} supera ρ²/2β = {params.peak_position:.6g}")
    return gap


@dataclass(frozen=True)
class TrajectoryCurve:
    """
    Trayectoria f_z(u) en [0, T].

    Constante ρ²/2β hasta t_z y parábola ρ²/2β − (β/2)(u − t_z)² después.
    """

    peak: float
    beta: float
    horizon: float
    t_z: float
    times: np.ndarray
    values: np.ndarray
    out_of_regime: bool

    def value(self, u: float) -> float:
        if u <= self.t_z:
            return self.peak
        return self.peak - 0.5 * self.beta * (u - self.t_z) ** 2

    def derivative(self, u: float) -> float:
        if u <= self.t_z:
            return 0.0
        return -self.beta * (u - self.t_z)


def ld_trajectory(
    params: ModelParams, T: float, z: float, samples: int = 201
) -> TrajectoryCurve:
    """
    Trayectoria óptima con t_z = T − √((2/β)(ρ²/2β − z)).

    Args:
        params: Parámetros del modelo
        T: Horizonte
        z: Posición final (≤ ρ²/2β)
        samples: Puntos de muestreo en [0, T]

    Raises:
        DomainError: Si z > ρ²/2β
    """
    gap = _check_z(params, z)
    beta = params.beta
    t_z = T - math.sqrt(2.0 * gap / beta)
    out_of_regime = t_z < 0
    if out_of_regime:
        logger.warning(
            f"t_z = {t_z:.6g} < 0 para z = {z}, T = {T}: trayectoria extrapolada"
        )

    times = np.linspace(0.0, T, samples)
    values = np.where(
        times <= t_z,
        params.peak_position,
        params.peak_position - 0.5 * beta * (times - t_z) ** 2,
    )
    return TrajectoryCurve(
        peak=params.peak_position,
        beta=beta,
        horizon=T,
        t_z=t_z,
        times=times,
        values=values,
        out_of_regime=out_of_regime,
    )


def ld_exponent(params: ModelParams, z: float) -> float:
    """g(z) = ρ³/2β − ρz − (2√(2β)/3)(ρ²/2β − z)^{3/2}."""
    gap = _check_z(params, z)
    rho, beta = params.rho, params.beta
    return rho**3 / (2.0 * beta) - rho * z - (2.0 * math.sqrt(2.0 * beta) / 3.0) * gap**1.5


def ld_exponent_gauss(params: ModelParams, z: float) -> float:
    """Aproximación de Taylor ρ³/6β − βz²/2ρ."""
    rho, beta = params.rho, params.beta
    return rho**3 / (6.0 * beta) - beta * z * z / (2.0 * rho)


def action_integral(params: ModelParams, curve: TrajectoryCurve) -> float:
    """∫_{t_z}^T (βf − ½(f' + ρ)²) du por cuadratura sobre la curva."""
    beta, rho = params.beta, params.rho

    def lagrangian(u: float) -> float:
        return beta * curve.value(u) - 0.5 * (curve.derivative(u) + rho) ** 2

    return adaptive_quad(lagrangian, curve.t_z, curve.horizon, epsabs=1e-12, epsrel=1e-12)


# Modelo discreto


class DiscreteMapping(BaseModel):
    """Resultado de discrete_map."""

    beta: float = Field(..., description="β = s√μ")
    rho: float = Field(..., description="Raíz sobre la rama creciente")
    selection_index: float = Field(..., description="N³μs²")
    rho_min: float = Field(..., description="Minimizador del residuo log N(ρ)")
    alternate_roots: List[float] = Field(
        default_factory=list, description="Raíces en la rama decreciente"
    )


def log_population_size(rho: float, beta: float) -> float:
    """log N(ρ, β) = ⅓log β − 3 log ρ + ρ³/6β − ρ(2β)^{-1/3}γ₁."""
    edge_scale = (2.0 * beta) ** (1.0 / 3.0)
    return (
        math.log(beta) / 3.0
        - 3.0 * math.log(rho)
        + rho**3 / (6.0 * beta)
        - rho * airy_zero(1) / edge_scale
    )


def population_size(params: ModelParams) -> float:
    """Tamaño poblacional N asociado a (ρ, β)."""
    log_n = log_population_size(params.rho, params.beta)
    if log_n > 700:
        raise NumericError(f"N = e^{log_n:.1f} desborda; usar log_population_size")
    return math.exp(log_n)


def discrete_map(N: float, mu: float, s: float) -> DiscreteMapping:
    """
    Mapea (N, μ, s) a (β, ρ).

    β = s√μ; ρ resuelve log N(ρ, β) = log N por bisección (xtol 1e-12) sobre la
    rama creciente, a la derecha del minimizador del residuo (convexo en ρ).
    Una raíz en la rama decreciente se reporta como no unicidad.

    Raises:
        DomainError: Si N ≤ 1, μ ≤ 0 o s ≤ 0
        NumericError: Si no hay bracket en (1e-8, 1e3)
    """
    if N <= 1 or mu <= 0 or s <= 0:
        raise DomainError(f"discrete_map requiere N > 1, μ > 0, s > 0; recibido ({N}, {mu}, {s})")

    beta = s * math.sqrt(mu)
    target = math.log(N)
    edge_scale = (2.0 * beta) ** (1.0 / 3.0)
    gamma1 = airy_zero(1)
    lo, hi = RHO_BRACKET

    def residual(rho: float) -> float:
        return log_population_size(rho, beta) - target

    def slope(rho: float) -> float:
        return -3.0 / rho + rho * rho / (2.0 * beta) - gamma1 / edge_scale

    rho_min = optimize.brentq(slope, lo, hi, xtol=1e-14)
    if residual(rho_min) > 0:
        raise NumericError(
            f"Sin bracket para ρ en {RHO_BRACKET}: min log N(ρ) = "
            f"{residual(rho_min) + target:.6g} > log N = {target:.6g}"
        )
    if residual(hi) < 0:
        raise NumericError(f"Sin bracket para ρ: log N(ρ = {hi}) < log N = {target:.6g}")

    rho = optimize.bisect(residual, rho_min, hi, xtol=BISECT_XTOL)

    alternate: List[float] = []
    if residual(lo) > 0 and residual(rho_min) < 0:
        alternate.append(optimize.bisect(residual, lo, rho_min, xtol=BISECT_XTOL))
        logger.warning(
            f"discrete_map: raíz alternativa ρ = {alternate[0]:.6g} en la rama "
            f"decreciente; se usa ρ = {rho:.6g}"
        )

    return DiscreteMapping(
        beta=beta,
        rho=rho,
        selection_index=N**3 * mu * s * s,
        rho_min=rho_min,
        alternate_roots=alternate,
    )


# Resumen de la onda


class WaveSummary(BaseModel):
    """Escalas de la onda viajera."""

    speed: float = Field(..., description="Tasa de adaptación v = βρ")
    bulk_variance: float = Field(..., description="Varianza de posiciones ρ/β")
    fitness_variance: float = Field(..., description="Varianza de fitness βρ")
    formation_time: float = Field(..., description="Tiempo de formación ρ/β")
    edge_level: float = Field(..., description="Borde L")
    edge_width: float = Field(..., description="(2β)^{-1/3}")
    selection_strength: float = Field(..., description="ρ³/β")
    peak_exponent: float = Field(..., description="g(0) = ρ³/6β")


def wave_summary(params: ModelParams) -> WaveSummary:
    """Velocidad, varianzas y escalas del borde para (ρ, β)."""
    rho, beta = params.rho, params.beta
    return WaveSummary(
        speed=beta * rho,
        bulk_variance=rho / beta,
        fitness_variance=beta * rho,
        formation_time=rho / beta,
        edge_level=level(params, 0.0),
        edge_width=1.0 / params.edge_scale,
        selection_strength=params.selection_strength,
        peak_exponent=rho**3 / (6.0 * beta),
    )
