"""
Análisis de poblaciones de bbmwave.

Este paquete:
1. Calcula funcionales de la población (N, Y, Z_A, V_φ) y el test de martingala (functionals)
2. Construye las medidas empíricas ζ y ξ y sus distancias a las leyes límite (measures)
"""
