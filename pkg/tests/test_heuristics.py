"""
Tests para la heurística de grandes desvíos y el mapeo al modelo discreto.
"""

import logging
import math

import numpy as np
import pytest

from theory.errors import DomainError
from theory.heuristics import (
    action_integral,
    discrete_map,
    ld_exponent,
    ld_exponent_gauss,
    ld_trajectory,
    log_population_size,
    population_size,
    wave_summary,
)
from theory.model import ModelParams, level


class TestLdExponent:
    """g(z) y su aproximación gaussiana."""

    def test_valor_en_cero(self, params):
        assert ld_exponent(params, 0.0) == pytest.approx(0.125 / 0.06, rel=1e-12)
        assert ld_exponent(params, 0.0) == pytest.approx(2.08333, abs=1e-5)

    def test_derivada_nula_en_cero(self, params):
        h = 1e-3
        slope = (ld_exponent(params, h) - ld_exponent(params, -h)) / (2 * h)
        assert abs(slope) <= 1e-6

    def test_curvatura_en_cero(self, params):
        h = 0.1
        second = (
            ld_exponent(params, h) - 2 * ld_exponent(params, 0.0) + ld_exponent(params, -h)
        ) / h**2
        assert second == pytest.approx(-params.beta / params.rho, abs=1e-4)

    def test_gaussiana_coincide_en_cero(self, params):
        assert ld_exponent_gauss(params, 0.0) == pytest.approx(ld_exponent(params, 0.0))

    def test_gaussiana_cerca_de_cero(self, params):
        assert ld_exponent_gauss(params, 1.0) == pytest.approx(ld_exponent(params, 1.0), abs=1e-3)

    def test_z_sobre_el_pico(self, params):
        with pytest.raises(DomainError):
            ld_exponent(params, params.peak_position + 0.1)


class TestTrajectory:
    """Trayectoria óptima f_z y su acción."""

    def test_tiempo_de_salida(self, params):
        curve = ld_trajectory(params, 100.0, 0.0)
        assert curve.t_z == pytest.approx(50.0)
        assert curve.out_of_regime is False

    def test_forma_de_la_curva(self, params):
        curve = ld_trajectory(params, 100.0, 0.0, samples=101)
        assert curve.values[0] == pytest.approx(params.peak_position)
        assert curve.values[-1] == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.diff(curve.values) <= 1e-12)
        assert curve.derivative(10.0) == 0.0

    @pytest.mark.parametrize("z", [-5.0, 0.0, 5.0])
    def test_identidad_de_la_accion(self, params, z):
        curve = ld_trajectory(params, 2 * params.rho / params.beta, z)
        assert action_integral(params, curve) == pytest.approx(ld_exponent(params, z), rel=1e-7)

    def test_fuera_de_regimen_avisa(self, params, caplog):
        with caplog.at_level(logging.WARNING):
            curve = ld_trajectory(params, 10.0, -20.0)
        assert curve.out_of_regime is True
        assert curve.t_z < 0
        assert "t_z" in caplog.text

    def test_z_sobre_el_pico(self, params):
        with pytest.raises(DomainError):
            ld_trajectory(params, 100.0, 20.0)


class TestDiscreteMap:
    """(N, μ, s) → (β, ρ)."""

    def test_log_n_en_punto_de_diseno(self):
        assert log_population_size(0.5, 0.01) == pytest.approx(6.934548, abs=1e-5)

    def test_ida_y_vuelta(self, caplog):
        N = math.exp(log_population_size(0.5, 0.01))
        with caplog.at_level(logging.WARNING):
            mapping = discrete_map(N, 1e-4, 1.0)
        assert mapping.beta == pytest.approx(0.01)
        assert mapping.rho == pytest.approx(0.5, abs=1e-6)
        assert mapping.rho_min < mapping.rho
        assert mapping.selection_index == pytest.approx(N**3 * 1e-4)

    @pytest.mark.parametrize("mu", [1e-6, 1e-5, 1e-4])
    @pytest.mark.parametrize("s", [1e-3, 1e-2, 1e-1])
    def test_ida_y_vuelta_en_grilla(self, mu, s):
        N = 1e6
        mapping = discrete_map(N, mu, s)
        assert mapping.beta == pytest.approx(s * math.sqrt(mu), rel=1e-12)
        assert log_population_size(mapping.rho, mapping.beta) == pytest.approx(math.log(N), abs=1e-6)
        assert mapping.rho > mapping.rho_min

    def test_raiz_alternativa_reportada(self, caplog):
        N = math.exp(log_population_size(0.5, 0.01))
        with caplog.at_level(logging.WARNING):
            mapping = discrete_map(N, 1e-4, 1.0)
        assert len(mapping.alternate_roots) == 1
        assert mapping.alternate_roots[0] < mapping.rho_min
        assert "alternativa" in caplog.text

    def test_population_size(self, params):
        assert math.log(population_size(params)) == pytest.approx(6.934548, abs=1e-5)

    @pytest.mark.parametrize("N,mu,s", [(1.0, 1e-4, 0.01), (1000.0, 0.0, 0.01), (1000.0, 1e-4, -1.0)])
    def test_entradas_invalidas(self, N, mu, s):
        with pytest.raises(DomainError):
            discrete_map(N, mu, s)


class TestWaveSummary:
    """Escalas de la onda."""

    def test_valores(self, params):
        summary = wave_summary(params)
        assert summary.speed == pytest.approx(0.005)
        assert summary.bulk_variance == pytest.approx(50.0)
        assert summary.formation_time == pytest.approx(50.0)
        assert summary.edge_level == pytest.approx(level(params, 0.0))
        assert summary.edge_width == pytest.approx(0.02 ** (-1.0 / 3.0))
        assert summary.peak_exponent == pytest.approx(ld_exponent(params, 0.0))

    def test_otro_punto(self):
        summary = wave_summary(ModelParams(rho=1.0, beta=0.1))
        assert summary.selection_strength == pytest.approx(10.0)
