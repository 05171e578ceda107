"""
Densities - Densidades esperadas de partículas, procesos con absorción y tasas de impacto.

Este módulo:
1. Evalúa la densidad libre p_t(x, y) y su masa en forma cerrada (dominio log)
2. Evalúa la densidad del movimiento browniano con reloj de muerte (suma de autofunciones)
3. Evalúa la densidad con absorción en ℓ = L_A y sus cotas explícitas
4. Calcula la tasa de impacto en la barrera y el número esperado de impactos
5. Aproxima la densidad gaussiana del bulk y reporta los términos descartados
6. Verifica la identidad de martingala ∫p^{L_A}(x,y)z_A(y)dy = e^{-Aβt/ρ}z_A(x)

Las series espectrales se truncan con cota de cola certificada (SpectralSeries);
fuera del régimen certificado se lanza RegimeError y el llamador debe usar
killed_density_bounds.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy import special
from scipy.special import logsumexp

from theory.airy import signed_log_ai, zero_table
from theory.errors import DomainError, NumericError, RegimeError
from theory.model import ModelParams, level as edge_level, z_weight
from theory.quadrature import adaptive_quad, panel_nodes, panel_quad

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

DEFAULT_MAX_TERMS = 64
DEFAULT_ABS_TOL = 1e-10
MAX_LOG_REMAINDER = 700.0


def _decay_rate(params: ModelParams) -> float:
    """β(2β)^{-1/3} = 2^{-1/3}β^{2/3}."""
    return params.beta / params.edge_scale


@dataclass(frozen=True)
class SpectralSeries:
    """
    Truncamiento de las sumas de autofunciones desplazadas.

    Attributes:
        num_terms: Truncamiento fijo (None = adaptativo con certificación)
        max_terms: Máximo de términos del modo adaptativo
        abs_tol: Cota de cola relativa a la envolvente del primer término
    """

    num_terms: Optional[int] = None
    max_terms: int = DEFAULT_MAX_TERMS
    abs_tol: float = DEFAULT_ABS_TOL

    def __post_init__(self):
        if self.num_terms is not None and self.num_terms < 1:
            raise DomainError(f"num_terms debe ser ≥ 1, recibido {self.num_terms}")
        if self.max_terms < 1:
            raise DomainError(f"max_terms debe ser ≥ 1, recibido {self.max_terms}")
        if self.abs_tol <= 0:
            raise DomainError(f"abs_tol debe ser > 0, recibido {self.abs_tol}")

    def tail_bounds(self, params: ModelParams, t: float, power: int = 2) -> np.ndarray:
        """
        Cota de cola relativa para cada truncamiento K = 1..max_terms.

        La envolvente del término k es e^{cγ_k t}/|Ai'(γ_k)|^power (los factores
        de Airy se acotan por max|Ai|, común a todos los términos). Se suma
        explícitamente hasta M = 2·max_terms + 1. Para k > M se usan
        |γ_k| ≥ (3π(4k−1)/8)^{2/3} y |Ai'(γ_k)| ≥ |Ai'(γ_M)|, y la suma se
        acota por su integral: Γ(3/2, λu_M)/(πλ^{3/2}) con λ = ct.

        Returns:
            Array tail[K-1] = Σ_{k>K} b_k / b_1
        """
        span = 2 * self.max_terms + 1
        zeros, derivs = zero_table(span)
        rate = _decay_rate(params) * t
        log_b = rate * zeros - power * np.log(np.abs(derivs))
        b = np.exp(log_b - log_b[0])

        u_last = (3.0 * math.pi * (4 * span - 1) / 8.0) ** (2.0 / 3.0)
        upper = special.gamma(1.5) * special.gammaincc(1.5, rate * u_last)
        remainder = 0.0
        if upper > 0:
            log_remainder = (
                math.log(upper)
                - 1.5 * math.log(rate)
                - math.log(math.pi)
                - power * math.log(abs(derivs[-1]))
                - log_b[0]
            )
            if log_remainder > MAX_LOG_REMAINDER:
                return np.full(self.max_terms, math.inf)
            remainder = math.exp(log_remainder)

        # suffix[i] = Σ_{k≥i} b_k (índices desde 0)
        suffix = np.cumsum(b[::-1])[::-1] + remainder
        return suffix[1 : self.max_terms + 1]

    def certify(self, params: ModelParams, t: float, power: int = 2) -> int:
        """
        Número de términos a usar en el tiempo t.

        Raises:
            DomainError: Si t ≤ 0
            RegimeError: Si ni max_terms alcanza la tolerancia
        """
        if t <= 0:
            raise DomainError(f"La serie espectral requiere t > 0, recibido {t}")
        if self.num_terms is not None:
            return self.num_terms

        tails = self.tail_bounds(params, t, power)
        ok = np.flatnonzero(tails <= self.abs_tol)
        if ok.size == 0:
            raise RegimeError(
                f"Serie no certificada en t = {t:.6g} con {self.max_terms} términos "
                f"(cola relativa {tails[-1]:.2e} > {self.abs_tol:.1e}); "
                f"usar killed_density_bounds o aumentar max_terms"
            )
        return int(ok[0]) + 1


DEFAULT_SERIES = SpectralSeries()


# Densidad libre


def free_log_density(params: ModelParams, t: float, x: float, y: ArrayLike) -> ArrayLike:
    """log p_t(x, y) de la densidad libre."""
    if t <= 0:
        raise DomainError(f"free_density requiere t > 0, recibido {t}")
    rho, beta = params.rho, params.beta
    yy = np.asarray(y, dtype=float)
    out = (
        -0.5 * math.log(2.0 * math.pi * t)
        + rho * x
        - rho * yy
        - (yy - x) ** 2 / (2.0 * t)
        - rho * rho * t / 2.0
        + beta * (yy + x) * t / 2.0
        + beta * beta * t**3 / 24.0
    )
    if np.ndim(out) == 0:
        return float(out)
    return out


def free_density(params: ModelParams, t: float, x: float, y: ArrayLike) -> ArrayLike:
    """
    Densidad esperada de partículas sin absorción.

    p_t(x,y) = (2πt)^{-1/2} exp(ρx − ρy − (y−x)²/2t − ρ²t/2 + β(y+x)t/2 + β²t³/24)

    Raises:
        DomainError: Si t ≤ 0
    """
    out = np.exp(free_log_density(params, t, x, y))
    if np.ndim(out) == 0:
        return float(out)
    return out


def free_mass(params: ModelParams, t: float, x: float) -> float:
    """Población esperada desde un ancestro en x: exp(βxt + β²t³/6 − βρt²/2)."""
    if t < 0:
        raise DomainError(f"free_mass requiere t ≥ 0, recibido {t}")
    beta = params.beta
    return math.exp(beta * x * t + beta * beta * t**3 / 6.0 - beta * params.rho * t * t / 2.0)


def _free_window(
    params: ModelParams, t: float, x: float, width: float = 40.0
) -> Tuple[float, float]:
    """Intervalo en y que contiene la masa de p_t(x, ·): centro x − ρt + βt²/2 ± width·√t."""
    center = x - params.rho * t + 0.5 * params.beta * t * t
    half = width * math.sqrt(t) + 1.0
    return center - half, center + half


def free_mass_quadrature(
    params: ModelParams, t: float, x: float, panels: int = 400, order: int = 20
) -> float:
    """∫ p_t(x, y) dy por Gauss–Legendre compuesto; debe coincidir con free_mass."""
    lo, hi = _free_window(params, t, x)
    return panel_quad(lambda y: free_density(params, t, x, y), lo, hi, panels, order)


def chapman_kolmogorov(
    params: ModelParams,
    s: float,
    t: float,
    x: float,
    z: float,
    panels: int = 400,
    order: int = 20,
) -> Tuple[float, float]:
    """
    (∫ p_s(x,y) p_t(y,z) dy, p_{s+t}(x,z)).

    La integral corre sobre la unión de las ventanas de masa de ambos factores.
    """
    lo1, hi1 = _free_window(params, s, x)
    span = 40.0 * math.sqrt(s + t) + params.rho * (s + t) + params.beta * (s + t) ** 2
    lo = min(lo1, z - span)
    hi = max(hi1, z + span)

    def integrand(y: np.ndarray) -> np.ndarray:
        return np.exp(free_log_density(params, s, x, y) + free_log_density(params, t, y, z))

    lhs = panel_quad(integrand, lo, hi, panels, order)
    return lhs, free_density(params, s + t, x, z)


# Sumas espectrales


def _spectral_sum(
    params: ModelParams,
    t: float,
    u: float,
    v: Optional[np.ndarray],
    num_terms: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    log|S| y signo de la suma de autofunciones en dominio log.

    Con v: S(v) = Σ_k e^{cγ_k t} Ai(au+γ_k) Ai(av+γ_k) / Ai'(γ_k)²
    Sin v: S = Σ_k e^{cγ_k t} Ai(au+γ_k) / Ai'(γ_k)
    """
    zeros, derivs = zero_table(num_terms)
    a = params.edge_scale
    log_decay = _decay_rate(params) * zeros * t

    log_u, sign_u = signed_log_ai(a * u + zeros)

    if v is None:
        log_terms = log_decay + log_u - np.log(np.abs(derivs))
        signs = sign_u * np.sign(derivs)
        lse, sign = logsumexp(log_terms, b=signs, return_sign=True)
        return np.atleast_1d(lse), np.atleast_1d(sign)

    vv = np.atleast_1d(v)
    log_v, sign_v = signed_log_ai(a * vv[:, None] + zeros[None, :])
    base = log_decay + log_u - 2.0 * np.log(np.abs(derivs))
    log_terms = base[None, :] + log_v
    signs = sign_u[None, :] * sign_v
    with np.errstate(divide="ignore"):
        lse, sign = logsumexp(log_terms, axis=1, b=signs, return_sign=True)
    return lse, sign


def _finish(log_values: np.ndarray, sign: np.ndarray, like: ArrayLike) -> ArrayLike:
    values = np.where(sign > 0, np.exp(log_values), 0.0)
    if np.ndim(like) == 0:
        return float(values[0])
    return values.reshape(np.shape(like))


def killed_bm_density(
    params: ModelParams,
    t: float,
    x: float,
    y: ArrayLike,
    series: SpectralSeries = DEFAULT_SERIES,
) -> ArrayLike:
    """
    Densidad de transición del movimiento browniano absorbido en 0 y con
    reloj de muerte ∫β|B|.

    p̂_t(x,y) = (2β)^{1/3} Σ_k e^{cγ_k t} Ai(ax+γ_k)Ai(ay+γ_k)/Ai'(γ_k)², a = (2β)^{1/3}

    Args:
        params: Parámetros del modelo (solo usa β)
        t: Tiempo (> 0, en el régimen certificado)
        x: Posición inicial (> 0)
        y: Posición final, escalar o array (y ≤ 0 da 0)
        series: Truncamiento

    Raises:
        DomainError: Si x ≤ 0 o t ≤ 0
        RegimeError: Si la serie no se certifica en t
    """
    if x <= 0:
        raise DomainError(f"killed_bm_density requiere x > 0, recibido {x}")
    num_terms = series.certify(params, t, power=2)

    yy = np.atleast_1d(np.asarray(y, dtype=float))
    inside = yy > 0
    log_values = np.full(yy.shape, -np.inf)
    sign = np.zeros(yy.shape)
    if inside.any():
        lse, sgn = _spectral_sum(params, t, x, yy[inside], num_terms)
        log_values[inside] = math.log(params.edge_scale) + lse
        sign[inside] = sgn
    return _finish(log_values, sign, y)


def killed_bm_hitting_density(
    params: ModelParams,
    t: float,
    x: float,
    series: SpectralSeries = DEFAULT_SERIES,
) -> float:
    """
    Densidad del tiempo de llegada a 0 del browniano con reloj de muerte.

    π_x(t) = ½ ∂_y p̂_t(x, y)|_{y=0} = ½(2β)^{2/3} Σ_k e^{cγ_k t} Ai(ax+γ_k)/Ai'(γ_k)
    """
    if x <= 0:
        raise DomainError(f"killed_bm_hitting_density requiere x > 0, recibido {x}")
    num_terms = series.certify(params, t, power=1)
    lse, sign = _spectral_sum(params, t, x, None, num_terms)
    log_value = math.log(0.5) + 2.0 * math.log(params.edge_scale) + lse
    return _finish(log_value, sign, 0.0)


def _resolve_level(params: ModelParams, A: float, level: Optional[float]) -> float:
    return edge_level(params, A) if level is None else float(level)


def killed_density(
    params: ModelParams,
    A: float,
    t: float,
    x: float,
    y: ArrayLike,
    series: SpectralSeries = DEFAULT_SERIES,
    level: Optional[float] = None,
) -> ArrayLike:
    """
    Densidad esperada con absorción en ℓ = L_A.

    p_t^ℓ(x,y) = (2β)^{1/3} e^{(βℓ − ρ²/2)t + ρ(x − y)} Σ_k e^{cγ_k t}
                 Ai(a(ℓ−x)+γ_k) Ai(a(ℓ−y)+γ_k) / Ai'(γ_k)²

    Args:
        params: Parámetros del modelo
        A: Desplazamiento del nivel
        t: Tiempo (> 0, en el régimen certificado)
        x: Posición inicial (< ℓ)
        y: Posición final, escalar o array (y ≥ ℓ da 0)
        series: Truncamiento
        level: Nivel ℓ explícito (por defecto L_A)

    Raises:
        DomainError: Si x ≥ ℓ o t ≤ 0
        RegimeError: Si la serie no se certifica en t
    """
    ell = _resolve_level(params, A, level)
    if x >= ell:
        raise DomainError(f"killed_density requiere x < ℓ = {ell:.6g}, recibido {x}")
    num_terms = series.certify(params, t, power=2)

    rho = params.rho
    yy = np.atleast_1d(np.asarray(y, dtype=float))
    inside = yy < ell
    log_values = np.full(yy.shape, -np.inf)
    sign = np.zeros(yy.shape)

    if inside.any():
        y_in = yy[inside]
        lse, sgn = _spectral_sum(params, t, ell - x, ell - y_in, num_terms)
        common = (
            math.log(params.edge_scale)
            + (params.beta * ell - rho * rho / 2.0) * t
            + rho * x
        )
        log_values[inside] = common - rho * y_in + lse
        sign[inside] = sgn
    return _finish(log_values, sign, y)


def killed_density_leading(
    params: ModelParams, A: float, t: float, x: float, y: ArrayLike
) -> ArrayLike:
    """
    Término principal k = 1 de la densidad con absorción en L_A.

    (2β)^{1/3} e^{-βAt/ρ} / Ai'(γ₁)² · e^{ρx}α(L_A − x) · e^{-ρy}α(L_A − y)
    """
    if t < 0:
        raise DomainError(f"killed_density_leading requiere t ≥ 0, recibido {t}")
    ell = edge_level(params, A)
    zeros, derivs = zero_table(1)
    a, rho = params.edge_scale, params.rho

    yy = np.atleast_1d(np.asarray(y, dtype=float))
    log_x, sign_x = signed_log_ai(np.array([a * (ell - x) + zeros[0]]))
    log_y, sign_y = signed_log_ai(a * (ell - yy) + zeros[0])
    log_values = (
        math.log(a)
        - params.beta * A * t / rho
        - 2.0 * math.log(abs(derivs[0]))
        + rho * x
        + log_x[0]
        - rho * yy
        + log_y
    )
    valid = (x < ell) & (yy < ell) & (sign_x[0] > 0) & (sign_y > 0)
    return _finish(log_values, np.where(valid, 1.0, 0.0), y)


def leading_error_envelope(
    params: ModelParams, A: float, t: float, x: float, y: float, terms: int = 256
) -> float:
    """
    Envolvente Σ_{k≥2} e^{(γ₁−γ_k)((2β)^{1/6}(√(L_A−x) + √(L_A−y)) − 2^{-1/3}β^{2/3}t)}.

    Cuantifica (con constante 1) el error relativo del término principal;
    inf cuando el exponente no es negativo.
    """
    ell = edge_level(params, A)
    zeros, _ = zero_table(terms)
    exponent = (2.0 * params.beta) ** (1.0 / 6.0) * (
        math.sqrt(max(ell - x, 0.0)) + math.sqrt(max(ell - y, 0.0))
    ) - _decay_rate(params) * t
    if exponent >= 0:
        return math.inf
    return float(np.sum(np.exp((zeros[0] - zeros[1:]) * exponent)))


class DensityBounds(NamedTuple):
    """Cotas explícitas de la densidad con absorción."""

    small_time: float
    reflection: float


def killed_density_bounds(
    params: ModelParams,
    A: float,
    t: float,
    x: float,
    y: float,
    level: Optional[float] = None,
) -> DensityBounds:
    """
    Cotas de forma cerrada válidas para todo t > 0 (ℓ ≥ 0, x, y < ℓ).

    small_time: (2πt)^{-1/2} exp(ρx − ρy − (y−x)²/2t − ρ²t/2 + βℓt)
    reflection: √2/√π·(ℓ−x)(ℓ−y)/t^{3/2} · exp(mismo exponente)
    """
    if t <= 0:
        raise DomainError(f"killed_density_bounds requiere t > 0, recibido {t}")
    ell = _resolve_level(params, A, level)
    if x >= ell or y >= ell:
        return DensityBounds(small_time=0.0, reflection=0.0)

    rho = params.rho
    exponent = (
        rho * x - rho * y - (y - x) ** 2 / (2.0 * t) - rho * rho * t / 2.0 + params.beta * ell * t
    )
    small_time = math.exp(exponent) / math.sqrt(2.0 * math.pi * t)
    reflection = (
        math.sqrt(2.0 / math.pi) * (ell - x) * (ell - y) / t**1.5 * math.exp(exponent)
    )
    return DensityBounds(small_time=small_time, reflection=reflection)


# Tasas de impacto


def hit_rate(
    params: ModelParams,
    A: float,
    t: float,
    x: float,
    series: SpectralSeries = DEFAULT_SERIES,
) -> float:
    """
    Tasa a la que las partículas alcanzan ℓ = L_A en el tiempo t.

    r(t) = ½(2β)^{2/3} e^{-ρℓ} Σ_k e^{(β(ℓ + (2β)^{-1/3}γ_k) − ρ²/2)t}
           e^{ρx} Ai((2β)^{1/3}(ℓ−x)+γ_k) / Ai'(γ_k)

    Es la derivada término a término −½∂_y p_t^ℓ(x, y) en y = ℓ; ver
    hit_rate_gate para la validación por diferencias finitas.
    """
    ell = edge_level(params, A)
    if x >= ell:
        raise DomainError(f"hit_rate requiere x < L_A = {ell:.6g}, recibido {x}")
    num_terms = series.certify(params, t, power=1)

    rho = params.rho
    lse, sign = _spectral_sum(params, t, ell - x, None, num_terms)
    log_value = (
        math.log(0.5)
        + 2.0 * math.log(params.edge_scale)
        - rho * ell
        + (params.beta * ell - rho * rho / 2.0) * t
        + rho * x
        + lse
    )
    return _finish(log_value, sign, 0.0)


def hit_rate_gate(
    params: ModelParams,
    A: float,
    t: float,
    x: float,
    series: SpectralSeries = DEFAULT_SERIES,
    rtol: float = 1e-4,
) -> Dict[str, float]:
    """
    Valida hit_rate contra una diferencia finita de killed_density.

    D(h) = p_t^ℓ(x, ℓ − h)/h con h ∈ {1e-3, 1e-4}; Richardson
    (10·D(1e-4) − D(1e-3))/9 estima −∂_y p en ℓ y la tasa es la mitad.

    Raises:
        NumericError: Si la discrepancia relativa supera rtol
    """
    ell = edge_level(params, A)
    coarse, fine = 1e-3, 1e-4
    values = killed_density(params, A, t, x, np.array([ell - coarse, ell - fine]), series)
    slope = (10.0 * values[1] / fine - values[0] / coarse) / 9.0
    finite_difference = 0.5 * slope
    series_value = hit_rate(params, A, t, x, series)

    discrepancy = abs(finite_difference - series_value) / abs(series_value)
    report = {
        "series": series_value,
        "finite_difference": finite_difference,
        "relative_discrepancy": discrepancy,
    }
    if not discrepancy <= rtol:
        raise NumericError(
            f"hit_rate no pasa la validación por diferencias finitas: "
            f"serie = {series_value:.10e}, DF = {finite_difference:.10e}, "
            f"discrepancia = {discrepancy:.2e} > {rtol:.0e}"
        )
    logger.info(f"Validación de hit_rate OK (discrepancia relativa {discrepancy:.2e})")
    return report


def expected_hits(
    params: ModelParams,
    A: float,
    u: float,
    v: float,
    x: float,
    series: SpectralSeries = DEFAULT_SERIES,
) -> float:
    """
    Número esperado de partículas que alcanzan L_A en [u, v].

    Integra hit_rate con cuadratura adaptativa; el truncamiento se certifica
    una vez en t = u (el peor caso) y se fija para todo el intervalo.

    Raises:
        DomainError: Si u < 0 o v < u
        RegimeError: Si la serie no se certifica en u
    """
    if u < 0 or v < u:
        raise DomainError(f"expected_hits requiere 0 ≤ u ≤ v, recibido ({u}, {v})")
    if u == v:
        return 0.0

    fixed = SpectralSeries(num_terms=series.certify(params, u, power=1))
    return adaptive_quad(lambda t: hit_rate(params, A, t, x, fixed), u, v)


# Aproximación gaussiana del bulk


def bulk_gaussian_approx(params: ModelParams, t: float, x: float, y: ArrayLike) -> ArrayLike:
    """
    Aproximación de orden principal de p_t(x,y) cerca de x = ρ²/2β, t = ρ/β.

    Con s = ρ/β − t y w = ρ²/2β − x:
    √(β/2πρ)·exp(ρx − ρ³/3β − βy²/2ρ − β²s³/6 + βws)
    """
    rho, beta = params.rho, params.beta
    s = rho / beta - t
    w = params.peak_position - x
    yy = np.asarray(y, dtype=float)
    out = math.sqrt(beta / (2.0 * math.pi * rho)) * np.exp(
        rho * x
        - rho**3 / (3.0 * beta)
        - beta * yy**2 / (2.0 * rho)
        - beta * beta * s**3 / 6.0
        + beta * w * s
    )
    if yy.ndim == 0:
        return float(out)
    return out


def bulk_gaussian_diagnostics(
    params: ModelParams, t: float, x: float, y: float
) -> Dict[str, float]:
    """
    Magnitudes de los términos descartados por bulk_gaussian_approx.

    Returns:
        Dict con los tres términos O(·) y las razones de régimen
        |w|/√(ρ/β) y s/(ρ^{1/4}β^{-3/4}) (ambas deben ser ≪ 1)
    """
    rho, beta = params.rho, params.beta
    s = rho / beta - t
    w = params.peak_position - x
    return {
        "s2_beta2_y_over_rho": s * s * beta * beta * abs(y) / rho,
        "s_beta2_y2_over_rho2": abs(s) * beta * beta * y * y / rho**2,
        "beta_wy_over_rho": beta * abs(w * y) / rho,
        "w_ratio": abs(w) / math.sqrt(rho / beta),
        "s_ratio": abs(s) / (rho**0.25 * beta**-0.75),
    }


# Identidades


def martingale_identity(
    params: ModelParams,
    A: float,
    t: float,
    x: float,
    series: SpectralSeries = DEFAULT_SERIES,
    panels: int = 200,
    order: int = 20,
) -> Tuple[float, float]:
    """
    (∫ p_t^{L_A}(x,y) z_A(y) dy, e^{-Aβt/ρ} z_A(x)).

    La integral usa Gauss–Legendre compuesto en u = (2β)^{1/3}(L_A − y) ∈ [0, 15];
    más allá z_A es despreciable.
    """
    ell = edge_level(params, A)
    a = params.edge_scale
    nodes, weights = panel_nodes(0.0, 15.0, panels, order)
    y = ell - nodes / a
    integrand = killed_density(params, A, t, x, y, series) * z_weight(params, A, y)
    lhs = float(np.dot(weights, integrand)) / a
    rhs = math.exp(-A * params.beta * t / params.rho) * z_weight(params, A, x)
    return lhs, rhs


def density_curve(
    params: ModelParams,
    t: float,
    x: float,
    ys: np.ndarray,
    A: Optional[float] = None,
    series: SpectralSeries = DEFAULT_SERIES,
) -> List[Tuple[float, float, float]]:
    """Filas (y, libre, con absorción) para exportar; absorción NaN si A es None."""
    free = free_density(params, t, x, ys)
    if A is None:
        killed = np.full(np.shape(ys), np.nan)
    else:
        killed = killed_density(params, A, t, x, ys, series)
    return [(float(a), float(b), float(c)) for a, b, c in zip(ys, free, killed)]
