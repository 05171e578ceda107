"""
Quadrature - Integración numérica compartida.

Este módulo:
1. Envuelve scipy.integrate.quad y traduce sus avisos a NumericError
2. Provee reglas compuestas de Gauss–Legendre sobre paneles (vectorizadas)
"""

import logging
import warnings
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy import integrate

from theory.errors import NumericError

logger = logging.getLogger(__name__)


def adaptive_quad(
    func: Callable[[float], float],
    a: float,
    b: float,
    epsabs: float = 1e-13,
    epsrel: float = 1e-11,
    limit: int = 400,
    points: Tuple[float, ...] = (),
) -> float:
    """
    Cuadratura adaptativa con errores explícitos.

    Args:
        func: Integrando escalar
        a: Límite inferior (puede ser -inf)
        b: Límite superior (puede ser +inf)
        epsabs: Tolerancia absoluta
        epsrel: Tolerancia relativa
        limit: Máximo de subintervalos
        points: Puntos de quiebre (solo intervalos finitos)

    Returns:
        Valor de la integral

    Raises:
        NumericError: Si quad no converge o el resultado no es finito
    """
    if a == b:
        return 0.0

    kwargs = {"epsabs": epsabs, "epsrel": epsrel, "limit": limit}
    if points and np.isfinite(a) and np.isfinite(b):
        kwargs["points"] = list(points)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.quad(func, a, b, **kwargs)

    if not np.isfinite(value):
        raise NumericError(f"Cuadratura no finita en [{a}, {b}]")

    if caught:
        # quad avisa también cuando solo el redondeo impide la tolerancia pedida
        if abserr > max(1e-8, 1e-6 * abs(value)):
            raise NumericError(
                f"La cuadratura no convergió en [{a}, {b}]: {caught[-1].message} "
                f"(err ≈ {abserr:.1e})"
            )
        logger.debug(f"quad [{a}, {b}] con aviso tolerable: {caught[-1].message}")

    logger.debug(f"quad [{a}, {b}] = {value:.6e} (err ≈ {abserr:.1e})")
    return float(value)


@lru_cache(maxsize=16)
def _legendre_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(
    a: float, b: float, panels: int = 64, order: int = 20
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodos y pesos de Gauss–Legendre compuesto sobre [a, b].

    Args:
        a: Límite inferior finito
        b: Límite superior finito
        panels: Número de subintervalos iguales
        order: Nodos por subintervalo

    Returns:
        Tuple (nodes, weights), arrays 1-D de largo panels·order
    """
    nodes, weights = _legendre_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])

    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return x, w


def panel_quad(
    func: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    panels: int = 64,
    order: int = 20,
) -> float:
    """Integra una función vectorizada con Gauss–Legendre compuesto."""
    x, w = panel_nodes(a, b, panels, order)
    values = np.asarray(func(x), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericError(f"Integrando no finito en [{a}, {b}]")
    return float(np.dot(w, values))
