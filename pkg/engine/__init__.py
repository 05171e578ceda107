"""
Motor Monte Carlo de bbmwave.

Este paquete:
1. Representa poblaciones como struct-of-arrays (population)
2. Deriva streams de números aleatorios reproducibles (rng)
3. Evoluciona la BBM con esquema de Euler y thinning de eventos (simulator)
4. Ejecuta réplicas en bloques, en paralelo y con agregación determinista (replicas)

Solo depende de theory/.
"""
