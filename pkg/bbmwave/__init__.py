"""
bbmwave - Laboratorio de movimiento browniano ramificado con selección lineal.

Este paquete:
1. Carga la configuración de proceso (config) y de experimento (models)
2. Ejecuta los experimentos por lotes (experiments)
3. Escribe manifest.json, metrics.json y CSVs (artifacts)
4. Expone la CLI `python -m bbmwave` (main)
"""

__version__ = "0.3.0"
