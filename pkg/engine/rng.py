"""
RNG - Streams de números aleatorios reproducibles.

Cada réplica usa un Generator PCG64 derivado de
SeedSequence(master_seed, spawn_key=(stream,)). Mismo (seed, stream)
implica la misma secuencia, sin importar cómo se repartan las réplicas.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

SEED_MAX = 2**64 - 1


class RngSpec(BaseModel):
    """Semilla maestra de una corrida."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    master_seed: int = Field(..., ge=0, le=SEED_MAX, description="Semilla maestra de 64 bits")

    def seed_sequence(self, stream: int) -> np.random.SeedSequence:
        if stream < 0:
            raise ValueError(f"stream debe ser ≥ 0, recibido {stream}")
        return np.random.SeedSequence(self.master_seed, spawn_key=(stream,))

    def generator(self, stream: int) -> np.random.Generator:
        """Generator independiente para el stream dado."""
        return np.random.Generator(np.random.PCG64(self.seed_sequence(stream)))
