"""
Errores de bbmwave.

Jerarquía compartida por todos los paquetes. El runner (bbmwave/main.py)
traduce cada clase a un código de salida:
- ConfigurationError, DomainError, UsageError → 2
- NumericError, RegimeError, CapacityError → 3
"""

from __future__ import annotations

from typing import Any, Optional


class BBMWaveError(Exception):
    """Error base del laboratorio."""


class ConfigurationError(BBMWaveError, ValueError):
    """Parámetros, perfiles de tasas o configuraciones inválidas."""


class DomainError(BBMWaveError, ValueError):
    """Argumento fuera del dominio de la operación (t ≤ 0, s < 0, ...)."""


class UsageError(BBMWaveError, ValueError):
    """Uso incorrecto: experimento desconocido, ensemble incompatible, etc."""


class NumericError(BBMWaveError, ArithmeticError):
    """No convergencia, overflow, posiciones no finitas o gate numérico fallido."""


class RegimeError(NumericError):
    """La serie espectral no se puede certificar en el t pedido."""


class CapacityError(BBMWaveError, RuntimeError):
    """
    Se excedió el presupuesto de partículas o el techo de posición.

    Conserva el EventLog parcial y la réplica afectada para diagnóstico.
    """

    def __init__(
        self,
        message: str,
        partial_log: Optional[Any] = None,
        replica: Optional[int] = None,
    ):
        super().__init__(message)
        self.partial_log = partial_log
        self.replica = replica

    def with_replica(self, replica: int) -> "CapacityError":
        """Retorna una copia etiquetada con el id global de réplica."""
        return CapacityError(
            f"réplica {replica}: {self}", partial_log=self.partial_log, replica=replica
        )

    def __reduce__(self):
        # Conserva log y réplica al cruzar procesos del pool
        return (CapacityError, (self.args[0], self.partial_log, self.replica))
