"""
Runner de bbmwave - Ejecuta un experimento y escribe sus artefactos.

Este módulo:
1. Parsea la CLI `python -m bbmwave <experimento> --config <archivo>`
2. Carga y valida el ExperimentConfig (JSON) con los overrides de la CLI
3. Escribe manifest.json, despacha el experimento y escribe métricas y CSVs
4. Traduce los errores a códigos de salida (0 ok, 2 validación/uso, 3 numérico/capacidad)
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import ValidationError

from bbmwave.artifacts import RunWriter
from bbmwave.config import Settings, get_settings
from bbmwave.experiments import EXPERIMENTS
from bbmwave.models import ExperimentConfig, ExperimentName
from theory.errors import (
    BBMWaveError,
    CapacityError,
    ConfigurationError,
    DomainError,
    UsageError,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FAILED = 3


def exit_code(exc: BaseException) -> int:
    """Código de salida para una excepción del runner."""
    if isinstance(exc, (ValidationError, ConfigurationError, DomainError, UsageError)):
        return EXIT_INVALID
    return EXIT_FAILED


def load_config(
    path: Path,
    experiment: Optional[str] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    replicas: Optional[int] = None,
) -> ExperimentConfig:
    """
    Carga un ExperimentConfig desde JSON aplicando los overrides de la CLI.

    Args:
        path: Archivo JSON de configuración
        experiment: Experimento pedido en la CLI; debe coincidir con el del archivo
        seed: Reemplaza la semilla maestra
        out: Reemplaza el directorio de salida
        replicas: Reemplaza el número de réplicas

    Returns:
        ExperimentConfig validado

    Raises:
        UsageError: Si el archivo no existe, no es JSON o el experimento no coincide
        ValidationError: Si la configuración no valida
    """
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"No existe el archivo de configuración: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} no es JSON válido: {e}") from e
    if not isinstance(data, dict):
        raise UsageError(f"{path} debe contener un objeto JSON")

    if experiment is not None:
        declared = data.setdefault("experiment", experiment)
        if declared != experiment:
            raise UsageError(
                f"La CLI pide '{experiment}' pero {path.name} declara '{declared}'"
            )
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["outputs"] = out
    if replicas is not None:
        data["replicas"] = replicas

    return ExperimentConfig.model_validate(data)


def _failure(exc: BaseException, config: ExperimentConfig) -> Dict[str, Any]:
    error: Dict[str, Any] = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, CapacityError):
        error["replica"] = exc.replica
        if exc.partial_log is not None:
            horizon = config.horizon if config.horizon > 0 else 1.0
            error["partial_event_log"] = exc.partial_log.digest(np.linspace(0.0, horizon, 11))
    return error


def run(config: ExperimentConfig, settings: Optional[Settings] = None) -> int:
    """
    Ejecuta un experimento completo y escribe sus artefactos.

    Orden de escritura: manifest (running) → metrics.json → CSVs → manifest final.

    Args:
        config: Configuración validada
        settings: Settings de proceso (default: get_settings())

    Returns:
        Código de salida: 0, 2 o 3
    """
    settings = settings or get_settings()
    if config.outputs:
        out_dir = Path(config.outputs)
    else:
        out_dir = settings.output_path / config.experiment.value
    writer = RunWriter(out_dir)
    config_echo = config.model_dump(mode="json")
    writer.write_manifest(config_echo, status="running")

    name = config.experiment.value
    logger.info(f"Experimento '{name}' iniciado (seed={config.seed}, salida={out_dir})")
    try:
        result = EXPERIMENTS[config.experiment](config, settings)
        writer.write_metrics(result.metrics)
        for table in result.tables:
            writer.write_csv(table.name, table.header, table.rows)
    except (BBMWaveError, ValidationError) as exc:
        code = exit_code(exc)
        logger.error(f"Experimento '{name}' falló ({type(exc).__name__}, exit {code}): {exc}")
        writer.write_manifest(config_echo, status="failed", error=_failure(exc, config))
        return code

    writer.write_manifest(config_echo, status="ok")
    logger.info(f"Experimento '{name}' completado; artefactos en {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbmwave",
        description="Laboratorio de movimiento browniano ramificado con selección lineal",
    )
    parser.add_argument(
        "experiment",
        choices=[e.value for e in ExperimentName],
        help="Experimento a ejecutar",
    )
    parser.add_argument(
        "--config", required=True, type=Path, help="Archivo JSON de configuración"
    )
    parser.add_argument("--seed", type=int, default=None, help="Semilla maestra (override)")
    parser.add_argument("--out", default=None, help="Directorio de salida (override)")
    parser.add_argument("--replicas", type=int, default=None, help="Réplicas (override)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=settings.BBMWAVE_LOG_LEVEL.upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    try:
        config = load_config(
            args.config,
            experiment=args.experiment,
            seed=args.seed,
            out=args.out,
            replicas=args.replicas,
        )
    except (UsageError, ValidationError) as exc:
        logger.error(f"Configuración inválida: {exc}")
        return EXIT_INVALID

    return run(config, settings)


if __name__ == "__main__":
    sys.exit(main())
