"""
Theory - Biblioteca analítica y numérica de bbmwave.

Este paquete:
1. Define los parámetros del modelo, perfiles de tasas y barreras (model)
2. Implementa desde cero la función de Airy, sus ceros y la ley del borde (airy)
3. Evalúa densidades libres, con absorción y tasas de impacto (densities)
4. Calcula la heurística de grandes desviaciones y el mapeo al modelo discreto (heuristics)

No importa nada de engine/, analysis/ ni bbmwave/.
"""
