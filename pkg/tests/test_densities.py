"""
Tests para las densidades esperadas.

Cubre:
- Densidad libre: forma cerrada, masa, Chapman–Kolmogorov
- Certificación de las series espectrales (SpectralSeries)
- Densidad con absorción: soporte, cotas, término principal, identidad de martingala
- Tasa de impacto y número esperado de impactos
- Aproximación gaussiana del bulk
"""

import math

import numpy as np
import pytest

from theory import airy, densities
from theory.densities import SpectralSeries
from theory.errors import DomainError, RegimeError, NumericError
from theory.quadrature import panel_nodes


# Densidad libre


class TestFreeDensity:
    """p_t(x, y) y su masa."""

    def test_masa_fijada(self, params):
        assert densities.free_mass(params, 10.0, 0.0) == pytest.approx(
            math.exp(-0.7 / 3.0), rel=1e-12
        )
        assert densities.free_mass(params, 10.0, 0.0) == pytest.approx(0.79186, abs=1e-5)

    def test_masa_en_cero(self, params):
        assert densities.free_mass(params, 0.0, 3.0) == 1.0

    @pytest.mark.parametrize("t", [1.0, 5.0, 10.0])
    def test_masa_por_cuadratura(self, params, t):
        quad = densities.free_mass_quadrature(params, t, 0.0)
        closed = densities.free_mass(params, t, 0.0)
        assert quad == pytest.approx(closed, rel=1e-8)

    @pytest.mark.parametrize(
        "s,t,x,z",
        [
            (1.0, 1.0, 0.0, 0.0),
            (2.0, 3.0, 0.0, 1.0),
            (5.0, 5.0, -2.0, 2.0),
            (0.5, 4.0, 1.0, -1.0),
            (10.0, 10.0, 0.0, 0.0),
        ],
    )
    def test_chapman_kolmogorov(self, params, s, t, x, z):
        lhs, rhs = densities.chapman_kolmogorov(params, s, t, x, z)
        assert lhs == pytest.approx(rhs, rel=1e-6)

    def test_escalar_y_array(self, params):
        scalar = densities.free_density(params, 2.0, 0.0, 0.5)
        array = densities.free_density(params, 2.0, 0.0, np.array([0.5, 1.0]))
        assert isinstance(scalar, float)
        assert array[0] == pytest.approx(scalar)

    def test_log_densidad(self, params):
        y = np.array([-40.0, 0.0, 3.0])
        np.testing.assert_allclose(
            densities.free_log_density(params, 5.0, 1.0, y),
            np.log(densities.free_density(params, 5.0, 1.0, y)),
            rtol=1e-12,
        )

    def test_tiempo_no_positivo(self, params):
        with pytest.raises(DomainError):
            densities.free_density(params, 0.0, 0.0, 0.0)


# Series espectrales


class TestSpectralSeries:
    """Truncamiento certificado."""

    def test_pocos_terminos_en_tiempos_largos(self, params):
        assert densities.DEFAULT_SERIES.certify(params, 200.0) < 10

    def test_mas_terminos_en_tiempos_cortos(self, params, series):
        t_design = 2.0 * params.beta ** (-2.0 / 3.0)
        assert series.certify(params, 10.0) > series.certify(params, t_design)

    def test_regimen_no_certificado(self, params):
        with pytest.raises(RegimeError):
            SpectralSeries(max_terms=8).certify(params, 0.1)

    def test_terminos_fijos(self, params):
        assert SpectralSeries(num_terms=3).certify(params, 0.01) == 3

    def test_parametros_invalidos(self):
        with pytest.raises(DomainError):
            SpectralSeries(num_terms=0)
        with pytest.raises(DomainError):
            SpectralSeries(abs_tol=0.0)

    def test_cota_de_cola_domina_la_suma_larga(self, params):
        """La cota con pocos términos explícitos no subestima la cola real."""
        t = 5.0
        bounds = SpectralSeries(max_terms=8).tail_bounds(params, t)
        zeros, derivs = airy.zero_table(3000)
        log_b = params.beta / params.edge_scale * zeros * t - 2.0 * np.log(np.abs(derivs))
        b = np.exp(log_b - log_b[0])
        exact = np.cumsum(b[::-1])[::-1][1:9]
        assert np.all(np.isfinite(bounds))
        assert np.all(bounds >= exact)
        assert np.all(np.diff(bounds) < 0)

    def test_tiempo_no_positivo(self, params, series):
        with pytest.raises(DomainError):
            series.certify(params, 0.0)


# Densidad con absorción


class TestKilledDensity:
    """p_t^{L_A}(x, y)."""

    def test_cero_en_y_sobre_la_barrera(self, params, edge, series):
        values = densities.killed_density(
            params, 0.0, 10.0, edge - 1.0, np.array([edge, edge + 1.0]), series
        )
        np.testing.assert_array_equal(values, [0.0, 0.0])

    def test_x_sobre_la_barrera(self, params, edge, series):
        with pytest.raises(DomainError):
            densities.killed_density(params, 0.0, 10.0, edge, edge - 1.0, series)

    def test_menor_que_la_libre(self, params, edge, series):
        ys = np.linspace(edge - 8.0, edge - 0.1, 40)
        killed = densities.killed_density(params, 0.0, 10.0, edge - 1.0, ys, series)
        free = densities.free_density(params, 10.0, edge - 1.0, ys)
        assert np.all(killed >= 0)
        assert np.all(killed <= free * (1 + 1e-6))

    def test_absorcion_casi_nula_lejos_de_la_barrera(self, params, edge, series):
        """Lejos del borde y a tiempo corto la barrera casi no se siente."""
        t = 2.0 * params.beta ** (-2.0 / 3.0)
        x = edge - 20.0
        killed = densities.killed_density(params, 0.0, t, x, x, series)
        free = densities.free_density(params, t, x, x)
        assert killed == pytest.approx(free, rel=1e-3)

    def test_respeta_las_cotas(self, params, edge, series):
        x, y, t = edge - 1.0, edge - 3.0, 10.0
        value = densities.killed_density(params, 0.0, t, x, y, series)
        bounds = densities.killed_density_bounds(params, 0.0, t, x, y)
        assert value <= bounds.small_time * (1 + 1e-8)
        assert value <= bounds.reflection * (1 + 1e-8)

    def test_cotas_cero_sobre_la_barrera(self, params, edge):
        bounds = densities.killed_density_bounds(params, 0.0, 5.0, edge + 1.0, edge - 1.0)
        assert bounds.small_time == 0.0
        assert bounds.reflection == 0.0

    def test_termino_principal_a_tiempo_largo(self, params, edge):
        x, y, t = edge - 1.0, edge - 3.0, 300.0
        full = densities.killed_density(params, 0.0, t, x, y)
        leading = densities.killed_density_leading(params, 0.0, t, x, y)
        assert leading == pytest.approx(full, rel=1e-6)
        assert densities.leading_error_envelope(params, 0.0, t, x, y) < 1e-6

    def test_envolvente_infinita_a_tiempo_corto(self, params, edge):
        assert densities.leading_error_envelope(params, 0.0, 1.0, edge - 20.0, edge - 20.0) == math.inf

    def test_bm_con_reloj_de_muerte(self, params, series):
        values = densities.killed_bm_density(params, 10.0, 1.0, np.array([-1.0, 0.0, 1.0, 3.0]), series)
        assert values[0] == 0.0
        assert values[1] == 0.0
        assert np.all(values[2:] > 0)
        with pytest.raises(DomainError):
            densities.killed_bm_density(params, 10.0, 0.0, 1.0, series)

    def test_crece_con_el_nivel(self, params, edge, series):
        x = edge - 1.0
        ys = np.linspace(edge - 8.0, edge - 0.1, 30)
        lower = densities.killed_density(params, 0.0, 10.0, x, ys, series)
        previous = lower
        for shift in (1.0, 3.0, 8.0):
            higher = densities.killed_density(params, 0.0, 10.0, x, ys, series, level=edge + shift)
            assert np.all(higher >= previous * (1 - 1e-8))
            previous = higher
        free = densities.free_density(params, 10.0, x, ys)
        assert np.all(previous <= free * (1 + 1e-6))

    def test_semigrupo(self, params, edge, series):
        """∫ p_s(x, z) p_t(z, y) dz = p_{s+t}(x, y) con s = t = 10."""
        x, y = edge - 1.0, edge - 3.0
        z, w = panel_nodes(edge - 40.0, edge, panels=80, order=20)
        first = densities.killed_density(params, 0.0, 10.0, x, z, series)
        # reversibilidad: p_t(z, y) = e^{2ρ(z − y)} p_t(y, z)
        second = densities.killed_density(params, 0.0, 10.0, y, z, series) * np.exp(
            2.0 * params.rho * (z - y)
        )
        composed = float(np.dot(w, first * second))
        direct = densities.killed_density(params, 0.0, 20.0, x, y, series)
        assert composed == pytest.approx(direct, rel=1e-6)

    def test_densidad_de_llegada_es_media_derivada(self, params, series):
        h = 1e-4
        slope = densities.killed_bm_density(params, 10.0, 2.0, h, series) / h
        hitting = densities.killed_bm_hitting_density(params, 10.0, 2.0, series)
        assert hitting > 0
        assert hitting == pytest.approx(0.5 * slope, rel=1e-3)
        with pytest.raises(DomainError):
            densities.killed_bm_hitting_density(params, 10.0, -1.0, series)

    @pytest.mark.parametrize("A", [0.0, 1.0])
    def test_identidad_de_martingala(self, params, series, A):
        x = densities.edge_level(params, A) - 1.0
        lhs, rhs = densities.martingale_identity(params, A, 10.0, x, series)
        assert lhs == pytest.approx(rhs, rel=1e-6)


# Tasas de impacto


class TestHitRate:
    """Tasa de llegada a L_A y su integral."""

    def test_validacion_por_diferencias_finitas(self, params, edge, series):
        t = 2.0 * params.beta ** (-2.0 / 3.0)
        report = densities.hit_rate_gate(params, 0.0, t, edge - 1.0, series)
        assert report["relative_discrepancy"] <= 1e-4
        assert report["series"] > 0

    def test_gate_estricto_falla(self, params, edge, series):
        t = 2.0 * params.beta ** (-2.0 / 3.0)
        with pytest.raises(NumericError):
            densities.hit_rate_gate(params, 0.0, t, edge - 1.0, series, rtol=1e-15)

    def test_impactos_aditivos(self, params, edge, series):
        x = edge - 1.0
        whole = densities.expected_hits(params, 0.0, 10.0, 30.0, x, series)
        parts = densities.expected_hits(params, 0.0, 10.0, 20.0, x, series) + densities.expected_hits(
            params, 0.0, 20.0, 30.0, x, series
        )
        assert whole > 0
        assert parts == pytest.approx(whole, rel=1e-6)

    def test_intervalo_vacio(self, params, edge, series):
        assert densities.expected_hits(params, 0.0, 5.0, 5.0, edge - 1.0, series) == 0.0

    def test_intervalo_invertido(self, params, edge, series):
        with pytest.raises(DomainError):
            densities.expected_hits(params, 0.0, 5.0, 1.0, edge - 1.0, series)

    def test_x_sobre_la_barrera(self, params, edge, series):
        with pytest.raises(DomainError):
            densities.hit_rate(params, 0.0, 10.0, edge + 0.5, series)


# Bulk gaussiano


class TestBulkGaussian:
    """Aproximación de orden principal cerca de x = ρ²/2β, t = ρ/β."""

    def test_exacta_en_el_punto_central(self, params):
        t = params.rho / params.beta
        x = params.peak_position
        ys = np.linspace(-20.0, 20.0, 9)
        approx = densities.bulk_gaussian_approx(params, t, x, ys)
        exact = densities.free_density(params, t, x, ys)
        np.testing.assert_allclose(approx, exact, rtol=1e-10)

    def test_diagnosticos_nulos_en_el_punto_central(self, params):
        report = densities.bulk_gaussian_diagnostics(
            params, params.rho / params.beta, params.peak_position, 3.0
        )
        assert report["w_ratio"] == 0.0
        assert report["s_ratio"] == 0.0
        assert report["beta_wy_over_rho"] == 0.0

    def test_curva_de_densidad_sin_absorcion(self, params):
        rows = densities.density_curve(params, 5.0, 0.0, np.array([-1.0, 0.0]))
        assert len(rows) == 2
        assert math.isnan(rows[0][2])
        assert rows[1][1] == pytest.approx(densities.free_density(params, 5.0, 0.0, 0.0))
