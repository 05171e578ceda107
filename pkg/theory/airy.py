"""
Airy - Kernel de la función de Airy implementado desde cero.

Este módulo:
1. Evalúa Ai y Ai' con serie de Maclaurin (|x| ≤ 7) y expansiones asintóticas fuera
2. Calcula los ceros γ_k con inicializador asintótico + Newton vectorizado
3. Mantiene una tabla de ceros thread-safe y append-only (AiryZeroTable)
4. Calcula las integrales de ortogonalidad de las autofunciones desplazadas
5. Expone la ley del borde ν (densidad h, cdf, cuantiles, media parcial)
6. Calcula el crecimiento de Laplace e^{-r³/3}∫_{γ₁}^∞ e^{rz}Ai(z)dz en dominio log
7. Verifica Ai'' = x·Ai en forma integrada y puntual (diferencias centrales)

Sin argumento complejo, sin Bi, sin precisión arbitraria.
"""

import logging
import math
import threading
from functools import lru_cache
from typing import Dict, Tuple, Union

import numpy as np

from theory.errors import DomainError, NumericError
from theory.quadrature import adaptive_quad, panel_nodes

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Ai(0) y Ai'(0)
AI_0 = 0.355028053887817239
AIP_0 = -0.258819403792806798

SWITCHOVER = 7.0
SERIES_TERMS = 32
ASYMPTOTIC_TERMS = 20

_SQRT_PI = math.sqrt(math.pi)
_LOG_2_SQRT_PI = math.log(2.0 * _SQRT_PI)


def _maclaurin_coefficients() -> Dict[str, np.ndarray]:
    """Coeficientes en t = x³ de f, g y sus derivadas (Ai = c₁f − c₂g)."""
    a = np.empty(SERIES_TERMS)
    b = np.empty(SERIES_TERMS)
    a[0] = 1.0
    b[0] = 1.0
    for k in range(1, SERIES_TERMS):
        a[k] = a[k - 1] / ((3 * k - 1) * (3 * k))
        b[k] = b[k - 1] / ((3 * k) * (3 * k + 1))

    k = np.arange(SERIES_TERMS)
    # f'(x) = x² Σ_j 3(j+1) a_{j+1} t^j ; g'(x) = Σ_k (3k+1) b_k t^k
    da = 3.0 * (k[:-1] + 1) * a[1:]
    db = (3.0 * k + 1.0) * b

    # np.polyval espera el grado mayor primero
    return {"f": a[::-1], "g": b[::-1], "df": da[::-1], "dg": db[::-1]}


def _asymptotic_coefficients() -> Tuple[np.ndarray, np.ndarray]:
    """Coeficientes u_k, v_k de las expansiones asintóticas."""
    u = np.empty(ASYMPTOTIC_TERMS)
    v = np.empty(ASYMPTOTIC_TERMS)
    u[0] = 1.0
    v[0] = 1.0
    for k in range(1, ASYMPTOTIC_TERMS):
        u[k] = (
            (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
        ) * u[k - 1]
        v[k] = -(6 * k + 1) / (6 * k - 1) * u[k]
    return u, v


_MACLAURIN = _maclaurin_coefficients()
_U, _V = _asymptotic_coefficients()
_SIGNS = (-1.0) ** np.arange(ASYMPTOTIC_TERMS)

# Σ(-1)^k c_k w^k como polinomio en w = 1/ζ
_U_ALT = (_SIGNS * _U)[::-1]
_V_ALT = (_SIGNS * _V)[::-1]

# Parte par/impar para el lado oscilatorio, polinomios en w² = 1/ζ²
_HALF = np.arange(ASYMPTOTIC_TERMS // 2)
_HALF_SIGNS = (-1.0) ** _HALF
_U_EVEN = (_HALF_SIGNS * _U[0::2])[::-1]
_U_ODD = (_HALF_SIGNS * _U[1::2])[::-1]
_V_EVEN = (_HALF_SIGNS * _V[0::2])[::-1]
_V_ODD = (_HALF_SIGNS * _V[1::2])[::-1]


# Evaluadores por región


def _series(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    t = x**3
    f = np.polyval(_MACLAURIN["f"], t)
    g = x * np.polyval(_MACLAURIN["g"], t)
    df = x**2 * np.polyval(_MACLAURIN["df"], t)
    dg = np.polyval(_MACLAURIN["dg"], t)
    return AI_0 * f + AIP_0 * g, AI_0 * df + AIP_0 * dg


def _asymptotic_positive(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    zeta = (2.0 / 3.0) * x**1.5
    w = 1.0 / zeta
    quarter = x**0.25
    decay = np.exp(-zeta) / (2.0 * _SQRT_PI)
    ai = decay / quarter * np.polyval(_U_ALT, w)
    aip = -quarter * decay * np.polyval(_V_ALT, w)
    return ai, aip


def _asymptotic_negative(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    z = -x
    zeta = (2.0 / 3.0) * z**1.5
    w = 1.0 / zeta
    w2 = w * w
    quarter = z**0.25
    phase = zeta - 0.25 * math.pi
    cos_p = np.cos(phase)
    sin_p = np.sin(phase)

    p = np.polyval(_U_EVEN, w2)
    q = w * np.polyval(_U_ODD, w2)
    r = np.polyval(_V_EVEN, w2)
    s = w * np.polyval(_V_ODD, w2)

    ai = (cos_p * p + sin_p * q) / (_SQRT_PI * quarter)
    aip = quarter / _SQRT_PI * (sin_p * r - cos_p * s)
    return ai, aip


def _evaluate(x: ArrayLike) -> Tuple[np.ndarray, np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    scalar = arr.ndim == 0
    flat = np.atleast_1d(arr)

    ai_out = np.full(flat.shape, np.nan)
    aip_out = np.full(flat.shape, np.nan)

    inner = np.abs(flat) <= SWITCHOVER
    pos = flat > SWITCHOVER
    neg = flat < -SWITCHOVER

    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        if inner.any():
            ai_out[inner], aip_out[inner] = _series(flat[inner])
        if pos.any():
            ai_out[pos], aip_out[pos] = _asymptotic_positive(flat[pos])
        if neg.any():
            ai_out[neg], aip_out[neg] = _asymptotic_negative(flat[neg])

    far = np.isposinf(flat)
    ai_out[far] = 0.0
    aip_out[far] = 0.0
    return ai_out, aip_out, scalar


def airy(x: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """
    Evalúa (Ai(x), Ai'(x)) en una sola pasada.

    Args:
        x: Escalar o array real

    Returns:
        Tuple (ai, ai_prime) con la misma forma que x
    """
    ai_out, aip_out, scalar = _evaluate(x)
    if scalar:
        return float(ai_out[0]), float(aip_out[0])
    shape = np.shape(x)
    return ai_out.reshape(shape), aip_out.reshape(shape)


def ai(x: ArrayLike) -> ArrayLike:
    """Ai(x) con error absoluto ≤ 1e-10 en [-20, 20]."""
    return airy(x)[0]


def ai_prime(x: ArrayLike) -> ArrayLike:
    """Ai'(x) con error absoluto ≤ 1e-9 en [-20, 20]."""
    return airy(x)[1]


def log_ai(x: ArrayLike) -> ArrayLike:
    """
    log Ai(x) para x > γ₁ (donde Ai > 0); -inf fuera de ese dominio.

    Para x > SWITCHOVER usa la asintótica directamente en dominio log,
    sin underflow para x grandes.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    logabs, sign = signed_log_ai(arr)
    out = np.where((arr > airy_zero(1)) & (sign > 0), logabs, -np.inf)

    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def signed_log_ai(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    (log|Ai(x)|, signo de Ai(x)) para arrays, sin underflow en x grandes.

    Usado por las sumas espectrales en dominio log.
    """
    arr = np.asarray(x, dtype=float)
    logabs = np.empty(arr.shape)
    sign = np.ones(arr.shape)

    far = arr > SWITCHOVER
    if far.any():
        xf = arr[far]
        zeta = (2.0 / 3.0) * xf**1.5
        logabs[far] = (
            -zeta
            - _LOG_2_SQRT_PI
            - 0.25 * np.log(xf)
            + np.log(np.polyval(_U_ALT, 1.0 / zeta))
        )
    near = ~far
    if near.any():
        values = ai(arr[near])
        sign[near] = np.sign(values)
        with np.errstate(divide="ignore"):
            logabs[near] = np.log(np.abs(values))
    return logabs, sign


def switchover_discrepancy(points: int = 201) -> Dict[str, float]:
    """
    Máxima discrepancia serie vs asintótica en la banda 6 ≤ |x| ≤ 7.

    Returns:
        Dict con max_abs_ai y max_abs_ai_prime (ambos lados del eje)
    """
    band = np.linspace(SWITCHOVER - 1.0, SWITCHOVER, points)
    with np.errstate(over="ignore", under="ignore"):
        s_pos, sp_pos = _series(band)
        a_pos, ap_pos = _asymptotic_positive(band)
        s_neg, sp_neg = _series(-band)
        a_neg, ap_neg = _asymptotic_negative(-band)

    report = {
        "max_abs_ai": float(
            max(np.max(np.abs(s_pos - a_pos)), np.max(np.abs(s_neg - a_neg)))
        ),
        "max_abs_ai_prime": float(
            max(np.max(np.abs(sp_pos - ap_pos)), np.max(np.abs(sp_neg - ap_neg)))
        ),
    }
    logger.debug(f"Discrepancia en el cambio de representación: {report}")
    return report


def ode_residual(lo: float = -15.0, hi: float = 10.0, cells: int = 100) -> float:
    """
    Residuo de Ai'' = x·Ai en forma integrada.

    Por celda [a, b]: |Ai'(b) − Ai'(a) − ∫_a^b x·Ai(x) dx|, con Gauss–Legendre
    de orden 20. Evita diferenciar numéricamente a través del cambio de
    representación.

    Returns:
        Máximo residuo sobre las celdas
    """
    edges = np.linspace(lo, hi, cells + 1)
    x, w = panel_nodes(lo, hi, cells, 20)
    moments = (w * x * ai(x)).reshape(cells, -1).sum(axis=1)
    jumps = np.diff(ai_prime(edges))
    return float(np.max(np.abs(jumps - moments)))


def _central_second(evaluate, x: np.ndarray, h: float) -> np.ndarray:
    """Ai'' por diferencias centrales de Ai' con pasos h y h/2 (Richardson)."""

    def central(step: float) -> np.ndarray:
        return (evaluate(x + step)[1] - evaluate(x - step)[1]) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def ode_residual_pointwise(
    lo: float = -15.0, hi: float = 10.0, points: int = 1000, h: float = 1e-3
) -> float:
    """
    Máximo |Ai''(x) − x·Ai(x)| en points nodos equiespaciados de [lo, hi].

    Cada nodo diferencia dentro de su propia representación (serie o
    asintótica), así el salto en |x| = SWITCHOVER no entra al cociente.
    """
    x = np.linspace(lo, hi, points)
    second = np.empty_like(x)
    regions = (
        (_series, np.abs(x) <= SWITCHOVER),
        (_asymptotic_positive, x > SWITCHOVER),
        (_asymptotic_negative, x < -SWITCHOVER),
    )
    with np.errstate(over="ignore", under="ignore"):
        for evaluate, mask in regions:
            if mask.any():
                second[mask] = _central_second(evaluate, x[mask], h)
    residual = float(np.max(np.abs(second - x * ai(x))))
    logger.debug(f"Residuo puntual de la EDO en {points} nodos: {residual:.3e}")
    return residual


# Ceros


NEWTON_MAX_ITER = 100


def _zero_initializer(k: np.ndarray) -> np.ndarray:
    t = 3.0 * math.pi * (4.0 * k - 1.0) / 8.0
    t2 = t ** (-2.0)
    return -(t ** (2.0 / 3.0)) * (
        1.0 + t2 * (5.0 / 48.0 + t2 * (-5.0 / 36.0 + t2 * 77125.0 / 82944.0))
    )


def _refine_zeros(k: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Newton vectorizado sobre el inicializador asintótico."""
    x = _zero_initializer(k.astype(float))
    active = np.ones(x.shape, dtype=bool)

    for iteration in range(NEWTON_MAX_ITER):
        a, ap = airy(x[active])
        step = a / ap
        x[active] -= step
        done = np.abs(step) <= 1e-14 * np.maximum(1.0, np.abs(x[active]))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
        if not active.any():
            logger.debug(f"Newton convergió para {k.size} ceros en {iteration + 1} pasos")
            break
    else:
        raise NumericError(
            f"Newton no convergió en {NEWTON_MAX_ITER} iteraciones para "
            f"k = {k[active].tolist()[:5]}"
        )

    return x, airy(x)[1]


class AiryZeroTable:
    """
    Caché append-only de ceros γ₁ > γ₂ > ... y de Ai'(γ_k).

    Crece por bloques bajo un lock; las lecturas retornan vistas de solo
    lectura del prefijo pedido.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._zeros = np.empty(0)
        self._derivs = np.empty(0)

    def __len__(self) -> int:
        return self._zeros.size

    def ensure(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Garantiza al menos n ceros y retorna (zeros[:n], derivs[:n]).

        Args:
            n: Número de ceros requeridos (≥ 1)
        """
        if n < 1:
            raise DomainError(f"Se requiere n ≥ 1 ceros, recibido {n}")

        with self._lock:
            have = self._zeros.size
            if n > have:
                # Crecer con holgura para amortizar
                target = max(n, 2 * have, 16)
                k = np.arange(have + 1, target + 1)
                zeros, derivs = _refine_zeros(k)
                self._zeros = np.concatenate([self._zeros, zeros])
                self._derivs = np.concatenate([self._derivs, derivs])
                self._zeros.setflags(write=False)
                self._derivs.setflags(write=False)
                logger.debug(f"Tabla de ceros de Airy ampliada a {target} entradas")
            return self._zeros[:n], self._derivs[:n]


_TABLE = AiryZeroTable()


def get_zero_table() -> AiryZeroTable:
    """Tabla de ceros compartida por el proceso."""
    return _TABLE


def zero_table(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Primeros n ceros y sus derivadas Ai'(γ_k)."""
    return _TABLE.ensure(n)


def airy_zero(k: int) -> float:
    """
    k-ésimo cero γ_k de Ai (γ₁ ≈ -2.33811).

    Raises:
        DomainError: Si k < 1
        NumericError: Si Newton no converge
    """
    if k < 1:
        raise DomainError(f"airy_zero requiere k ≥ 1, recibido {k}")
    zeros, _ = _TABLE.ensure(k)
    return float(zeros[k - 1])


def airy_zero_deriv(k: int) -> float:
    """Ai'(γ_k); los signos alternan empezando en positivo."""
    if k < 1:
        raise DomainError(f"airy_zero_deriv requiere k ≥ 1, recibido {k}")
    _, derivs = _TABLE.ensure(k)
    return float(derivs[k - 1])


# Ortogonalidad


# Más allá de este argumento Ai(z)² < 1e-14 del pico
_TAIL_ARGUMENT = 10.0


def airy_orth(j: int, k: int) -> float:
    """
    ∫₀^∞ Ai(z + γ_j) Ai(z + γ_k) dz por cuadratura adaptativa.

    Vale Ai'(γ_j)² si j = k y 0 si j ≠ k.

    Raises:
        DomainError: Si j o k < 1
        NumericError: Si la cuadratura no converge
    """
    if j < 1 or k < 1:
        raise DomainError(f"airy_orth requiere índices ≥ 1, recibido ({j}, {k})")

    zeros, _ = zero_table(max(j, k))
    gj, gk = zeros[j - 1], zeros[k - 1]
    upper = _TAIL_ARGUMENT - min(gj, gk)

    # Cortes en los ceros de ambos factores
    breaks = sorted(
        {float(zeros[i] - gj) for i in range(j)} | {float(zeros[i] - gk) for i in range(k)}
    )
    breaks = [b for b in breaks if 0.0 < b < upper]

    return adaptive_quad(
        lambda z: ai(z + gj) * ai(z + gk),
        0.0,
        upper,
        epsabs=1e-13,
        epsrel=1e-11,
        points=tuple(breaks),
    )


def orth_matrix(n: int, panels: int = 128, order: int = 20) -> np.ndarray:
    """
    Matriz n×n de integrales de ortogonalidad con Gauss–Legendre compuesto.

    Args:
        n: Número de autofunciones
        panels: Subintervalos del dominio truncado
        order: Nodos por subintervalo

    Returns:
        Array (n, n) simétrico
    """
    zeros, _ = zero_table(n)
    upper = _TAIL_ARGUMENT - float(zeros[n - 1])
    z, w = panel_nodes(0.0, upper, panels, order)
    basis = ai(z[None, :] + zeros[:, None])
    return (basis * w[None, :]) @ basis.T


# Ley del borde ν


_EDGE_STEP = 0.25
_EDGE_MAX = 40.0
_EDGE_ORDER = 20


class _EdgeTable:
    """Integrales acumuladas de Ai(y + γ₁) y y·Ai(y + γ₁) sobre una grilla."""

    def __init__(self):
        gamma1 = airy_zero(1)
        self.gamma1 = gamma1
        self.grid = np.arange(0.0, _EDGE_MAX + _EDGE_STEP / 2, _EDGE_STEP)
        self.nodes, self.weights = np.polynomial.legendre.leggauss(_EDGE_ORDER)

        cum0 = np.zeros(self.grid.size)
        cum1 = np.zeros(self.grid.size)
        for i in range(1, self.grid.size):
            m0, m1 = self._segment(self.grid[i - 1 : i], self.grid[i : i + 1])
            cum0[i] = cum0[i - 1] + m0[0]
            cum1[i] = cum1[i - 1] + m1[0]

        self.cum0 = cum0
        self.cum1 = cum1
        self.norm = float(cum0[-1])

    def _segment(self, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        y = mid[:, None] + half[:, None] * self.nodes[None, :]
        values = ai(y + self.gamma1)
        m0 = half * (values @ self.weights)
        m1 = half * ((y * values) @ self.weights)
        return m0, m1

    def moments(self, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(∫₀^y Ai(s+γ₁)ds, ∫₀^y s·Ai(s+γ₁)ds) para y en [0, _EDGE_MAX]."""
        y = np.clip(y, 0.0, _EDGE_MAX)
        idx = np.minimum((y / _EDGE_STEP).astype(int), self.grid.size - 1)
        left = self.grid[idx]
        m0, m1 = self._segment(left, y)
        return self.cum0[idx] + m0, self.cum1[idx] + m1


@lru_cache(maxsize=1)
def _edge_table() -> _EdgeTable:
    table = _EdgeTable()
    logger.info(f"Tabla de la ley del borde construida (norma = {table.norm:.10f})")
    return table


@lru_cache(maxsize=1)
def edge_norm() -> float:
    """
    ∫₀^∞ Ai(z + γ₁) dz = 1/3 + ∫_{γ₁}^0 Ai(z) dz.

    Usa la identidad ∫₀^∞ Ai = 1/3 y cuadratura adaptativa en [γ₁, 0].
    """
    gamma1 = airy_zero(1)
    return 1.0 / 3.0 + adaptive_quad(ai, gamma1, 0.0)


def _shape_out(values: np.ndarray, y: ArrayLike) -> ArrayLike:
    if np.ndim(y) == 0:
        return float(values[0])
    return values.reshape(np.shape(y))


def edge_density(y: ArrayLike) -> ArrayLike:
    """h(y) = Ai(y + γ₁)/edge_norm() para y > 0, 0 en otro caso."""
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros(arr.shape)
    pos = arr > 0
    out[pos] = ai(arr[pos] + airy_zero(1)) / edge_norm()
    return _shape_out(out, y)


def edge_cdf(y: ArrayLike) -> ArrayLike:
    """Función de distribución de ν; monótona de 0 a 1."""
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros(arr.shape)
    pos = arr > 0
    if pos.any():
        m0, _ = _edge_table().moments(arr[pos])
        out[pos] = np.clip(m0 / edge_norm(), 0.0, 1.0)
    return _shape_out(out, y)


def edge_partial_mean(y: ArrayLike) -> ArrayLike:
    """∫₀^y s·h(s) ds (0 para y ≤ 0)."""
    arr = np.atleast_1d(np.asarray(y, dtype=float))
    out = np.zeros(arr.shape)
    pos = arr > 0
    if pos.any():
        _, m1 = _edge_table().moments(arr[pos])
        out[pos] = m1 / edge_norm()
    return _shape_out(out, y)


def edge_mean() -> float:
    """Media de ν."""
    return float(edge_partial_mean(_EDGE_MAX))


def edge_ppf(p: ArrayLike, max_iter: int = 60) -> ArrayLike:
    """
    Cuantil de ν por Newton salvaguardado con bisección.

    Args:
        p: Probabilidades en [0, 1]

    Returns:
        y tal que edge_cdf(y) = p
    """
    probs = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((probs < 0) | (probs > 1)):
        raise DomainError("edge_ppf requiere probabilidades en [0, 1]")

    table = _edge_table()
    cdf_grid = table.cum0 / edge_norm()
    idx = np.clip(np.searchsorted(cdf_grid, probs), 1, table.grid.size - 1)
    lo = table.grid[idx - 1].copy()
    hi = table.grid[idx].copy()
    y = np.interp(probs, cdf_grid, table.grid)

    for _ in range(max_iter):
        f = edge_cdf(y) - probs
        lo = np.where(f < 0, y, lo)
        hi = np.where(f >= 0, y, hi)
        dens = edge_density(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = y - f / dens
        inside = (newton > lo) & (newton < hi) & np.isfinite(newton)
        y_next = np.where(inside, newton, 0.5 * (lo + hi))
        if np.all(np.abs(y_next - y) <= 1e-13 * np.maximum(1.0, y)):
            y = y_next
            break
        y = y_next

    y = np.where(probs <= 0.0, 0.0, y)
    y = np.where(probs >= 1.0, _EDGE_MAX, y)
    return _shape_out(y, p)


# Crecimiento de Laplace


LAPLACE_R_MAX = 8.0


def laplace_growth(r: float) -> float:
    """
    e^{-r³/3} ∫_{γ₁}^∞ e^{rz} Ai(z) dz para r ∈ (0, 8].

    El integrando se compone en dominio log; tiende a 1 cuando r crece
    y a edge_norm() cuando r → 0⁺.

    Raises:
        DomainError: Si r está fuera de (0, 8]
    """
    if not 0.0 < r <= LAPLACE_R_MAX:
        raise DomainError(f"laplace_growth requiere r ∈ (0, {LAPLACE_R_MAX}], recibido {r}")

    gamma1 = airy_zero(1)
    shift = r**3 / 3.0

    def integrand(z: float) -> float:
        return math.exp(r * z - shift + log_ai(z))

    peak = r * r
    upper = peak + 30.0 * math.sqrt(2.0 * r) + 30.0
    value = adaptive_quad(integrand, gamma1, upper, points=tuple(sorted({0.0, peak})))

    if not math.isfinite(value):
        raise NumericError(f"laplace_growth no finito en r = {r}")
    return value
