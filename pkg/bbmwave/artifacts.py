"""
Artifacts - Escritura de manifest.json, metrics.json y CSVs de una corrida.

Este módulo:
1. Escribe el manifest antes de computar y lo reescribe al terminar
2. Escribe metrics.json de forma atómica (archivo temporal + os.replace)
3. Escribe CSVs con encabezado y floats en representación repr (ida y vuelta exacta)

metrics.json y los CSVs son idénticos byte a byte para la misma
configuración y semilla; el manifest además registra el tiempo de pared.
"""

import csv
import json
import logging
import math
import os
import platform
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
import pydantic
import scipy

from bbmwave import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
METRICS_NAME = "metrics.json"


def metric(value: float, stderr: Optional[float] = None) -> Dict[str, Optional[float]]:
    """Entrada {"value", "stderr"} para metrics.json."""
    return {"value": value, "stderr": stderr}


def _jsonable(obj: Any) -> Any:
    """Convierte numpy y floats no finitos (→ None) a JSON estricto."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def versions() -> Dict[str, str]:
    return {
        "bbmwave": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


class RunWriter:
    """Único escritor de archivos de una corrida."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.started = datetime.now()
        self.written: list[str] = []

    def _atomic_write(self, name: str, text: str) -> Path:
        target = self.out_dir / name
        fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=str(self.out_dir))
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return target

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        text = json.dumps(_jsonable(payload), sort_keys=True, indent=2, ensure_ascii=False)
        return self._atomic_write(name, text + "\n")

    def write_manifest(
        self,
        config: Dict[str, Any],
        status: str,
        error: Optional[Dict[str, Any]] = None,
    ) -> Path:
        """
        manifest.json con eco de la configuración, versiones y estado.

        Args:
            config: Configuración serializada (model_dump en modo JSON)
            status: "running", "ok" o "failed"
            error: Tipo, mensaje y diagnóstico del fallo, si lo hubo
        """
        manifest = {
            "config": config,
            "seed": config.get("seed"),
            "versions": versions(),
            "status": status,
            "started_at": self.started.isoformat(),
            "wall_time_seconds": (datetime.now() - self.started).total_seconds(),
            "artifacts": sorted(self.written),
        }
        if error is not None:
            manifest["error"] = error
        path = self.write_json(MANIFEST_NAME, manifest)
        logger.debug(f"Manifest ({status}) escrito en {path}")
        return path

    def write_metrics(self, metrics: Dict[str, Any]) -> Path:
        path = self.write_json(METRICS_NAME, metrics)
        self.written.append(METRICS_NAME)
        logger.info(f"Métricas escritas en {path}")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        """CSV con encabezado; floats en repr."""
        target = self.out_dir / name
        with open(target, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_format_cell(v) for v in row])
        self.written.append(name)
        logger.info(f"CSV escrito: {target}")
        return target
