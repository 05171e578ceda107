"""
Tests para el modelo: parámetros, perfiles de tasas, niveles, barreras y pesos.

Cubre:
- Validación de ModelParams y RateProfile (default_linear, tablas, callables)
- Tasas b(x), d(x) y la condición b − d = βx
- Nivel del borde L_A, barreras fija y móvil, ventanas
- Peso z_A y reporte de supuestos
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError

from theory import model
from theory.errors import ConfigurationError, DomainError
from theory.model import (
    Barrier,
    BarrierKind,
    ModelParams,
    RateProfile,
    RateProfileKind,
    alpha,
    assumption_report,
    barrier_level,
    barrier_offset,
    level,
    log_z_weight,
    rates,
    validate_params,
    windows,
    z_weight,
)


class TestModelParams:
    """Parámetros y magnitudes derivadas."""

    def test_magnitudes_derivadas(self, params):
        assert params.selection_strength == pytest.approx(12.5)
        assert params.bulk_variance == pytest.approx(50.0)
        assert params.peak_position == pytest.approx(12.5)
        assert params.edge_scale == pytest.approx(0.02 ** (1.0 / 3.0))

    def test_rho_no_positivo(self):
        with pytest.raises(ValidationError):
            ModelParams(rho=0.0, beta=0.01)

    def test_delta_fuera_de_rango(self):
        with pytest.raises(ValidationError):
            ModelParams(rho=0.5, beta=0.01, delta=1.0)

    def test_claves_desconocidas(self):
        with pytest.raises(ValidationError):
            ModelParams(rho=0.5, beta=0.01, gamma=1.0)


class TestRates:
    """Perfil de tasas por defecto y perfiles custom."""

    def test_default_lineal(self, params):
        birth, death = rates(params, 10.0)
        assert birth == pytest.approx(1.1)
        assert death == pytest.approx(1.0)

    def test_default_debajo_de_menos_uno_sobre_beta(self, params):
        birth, death = rates(params, -200.0)
        assert birth == 0.0
        assert death == pytest.approx(2.0)

    def test_tasa_neta_es_beta_x(self, params):
        x = np.linspace(-300.0, 300.0, 61)
        birth, death = rates(params, x)
        assert birth.shape == x.shape
        np.testing.assert_allclose(birth - death, params.beta * x, atol=1e-12)

    def test_default_con_delta_grande_falla(self):
        """b = 1 + βx supera 1/Δ antes de x = 1/β si Δ > 1/2."""
        params = ModelParams(rho=0.5, beta=0.01, delta=0.6)
        with pytest.raises(ConfigurationError):
            rates(params, 0.0)

    def test_tabla_que_viola_tasa_neta(self):
        profile = RateProfile(
            kind=RateProfileKind.CUSTOM,
            grid=[-200.0, 200.0],
            birth=[1.0, 1.0],
            death=[1.0, 1.0],
        )
        params = ModelParams(rho=0.5, beta=0.01, rate_profile=profile)
        with pytest.raises(ConfigurationError):
            validate_params(params)

    def test_tabla_incompleta(self):
        with pytest.raises(ValidationError):
            RateProfile(kind=RateProfileKind.CUSTOM, grid=[0.0, 1.0], birth=[1.0, 1.0])

    def test_default_no_admite_tabla(self):
        with pytest.raises(ValidationError):
            RateProfile(grid=[0.0, 1.0], birth=[1.0, 1.0], death=[1.0, 1.0])

    def test_callables_validos(self):
        beta = 0.01

        def birth(x):
            return np.where(x < -1.0 / beta, 0.0, 1.0 + beta * x)

        def death(x):
            return np.where(x < -1.0 / beta, -beta * x, 1.0)

        profile = RateProfile.from_callables(birth, death)
        params = ModelParams(rho=0.5, beta=beta, rate_profile=profile)
        assert profile.is_callable
        b, d = rates(params, np.array([0.0, 50.0]))
        np.testing.assert_allclose(b, [1.0, 1.5])
        np.testing.assert_allclose(d, [1.0, 1.0])

    def test_perfil_nuevo_siempre_se_valida(self):
        """Perfiles descartados no dejan pasar a uno nuevo sin validar."""
        beta = 0.01
        for _ in range(50):
            profile = RateProfile.from_callables(
                lambda x: np.where(x < -1.0 / beta, 0.0, 1.0 + beta * x),
                lambda x: np.where(x < -1.0 / beta, -beta * x, 1.0),
            )
            rates(ModelParams(rho=0.5, beta=beta, rate_profile=profile), 0.0)
            del profile
        bad = RateProfile.from_callables(lambda x: np.ones_like(x), lambda x: np.ones_like(x))
        with pytest.raises(ConfigurationError):
            rates(ModelParams(rho=0.5, beta=beta, rate_profile=bad), 0.0)

    def test_cache_de_validacion_acotado(self):
        for i in range(model.VALIDATION_CACHE_SIZE + 20):
            profile = RateProfile(
                kind=RateProfileKind.CUSTOM,
                grid=[-200.0, 0.0, 200.0 + i],
                birth=[0.0, 1.0, 1.0 + 0.01 * (200.0 + i)],
                death=[2.0, 1.0, 1.0],
            )
            rates(ModelParams(rho=0.5, beta=0.01, rate_profile=profile), 0.0)
        assert len(model._VALIDATED) <= model.VALIDATION_CACHE_SIZE


class TestLevels:
    """Borde L_A, barreras y ventanas."""

    def test_borde_en_punto_de_diseno(self, params):
        assert level(params, 0.0) == pytest.approx(21.114, abs=1e-3)

    def test_desplazamiento_a(self, params):
        assert level(params, 1.0) == pytest.approx(level(params, 0.0) - 2.0)

    def test_barrera_ninguna(self, params):
        assert barrier_level(Barrier(), params, 5.0) == math.inf

    def test_barrera_fija(self, params, edge):
        barrier = Barrier(kind=BarrierKind.FIXED, A=0.0)
        assert barrier_level(barrier, params, 100.0) == pytest.approx(edge)

    def test_barrera_movil_baja_con_el_tiempo(self, params):
        barrier = Barrier(kind=BarrierKind.MOVING, A=1.0)
        start = barrier_level(barrier, params, 0.0)
        assert start == pytest.approx(level(params, 1.0))
        assert barrier_level(barrier, params, 10.0) < start
        expected = start - (2.0 / 0.5) * math.expm1(2.0 * 0.01 * 10.0 / 0.5)
        assert barrier_level(barrier, params, 10.0) == pytest.approx(expected)

    def test_desplazamiento_de_barrera(self, params):
        moving = Barrier(kind=BarrierKind.MOVING, A=1.0)
        assert barrier_offset(Barrier(kind=BarrierKind.FIXED, A=1.0), params, 10.0) == 0.0
        assert barrier_offset(moving, params, 0.0) == 0.0
        offset = barrier_offset(moving, params, 10.0)
        assert offset < 0
        assert barrier_level(moving, params, 10.0) == pytest.approx(level(params, 1.0) + offset)

    def test_barrera_tiempo_negativo(self, params):
        with pytest.raises(DomainError):
            barrier_level(Barrier(kind=BarrierKind.FIXED), params, -1.0)

    def test_ventanas(self, params, edge):
        small, k_level, h_level = windows(params, 0.0, 10.0)
        assert small == pytest.approx(0.01 * 100 / 33)
        assert k_level == pytest.approx(edge - small / 2)
        assert h_level == pytest.approx(edge - 0.01 * 100 / 9)


class TestZWeight:
    """Peso z_A(x) = e^{ρx}Ai((2β)^{1/3}(L_A − x) + γ₁)1{x < L_A}."""

    def test_cero_en_el_borde_y_arriba(self, params, edge):
        assert z_weight(params, 0.0, edge) == 0.0
        assert z_weight(params, 0.0, edge + 3.0) == 0.0

    def test_positivo_debajo(self, params, edge):
        values = z_weight(params, 0.0, np.linspace(edge - 60.0, edge - 1e-3, 200))
        assert np.all(values > 0)

    def test_sin_underflow_lejos(self, params, edge):
        assert z_weight(params, 0.0, edge - 200.0) >= 0.0

    def test_log_coincide(self, params, edge):
        x = np.array([edge - 30.0, edge - 5.0, edge - 0.5])
        np.testing.assert_allclose(
            log_z_weight(params, 0.0, x), np.log(z_weight(params, 0.0, x)), rtol=1e-12
        )
        assert log_z_weight(params, 0.0, edge + 1.0) == -math.inf

    def test_alpha_reconstruye_z(self, params, edge):
        x = edge - 4.0
        expected = math.exp(params.rho * x) * alpha(params, edge - x)
        assert z_weight(params, 0.0, x) == pytest.approx(expected, rel=1e-10)
        assert alpha(params, 0.0) == pytest.approx(0.0, abs=1e-8)


class TestAssumptionReport:
    """Diagnósticos de régimen."""

    def test_estado_vacio(self, params):
        report = assumption_report(params, np.array([]))
        assert report.degenerate is True
        assert report.num_particles == 0
        assert report.advisories

    def test_seleccion_debil_avisa(self, caplog):
        params = ModelParams(rho=0.1, beta=0.01)
        report = assumption_report(params, np.array([0.0]))
        assert any("ρ³/β" in a for a in report.advisories)
        assert "ρ³/β" in caplog.text

    def test_estadisticos_positivos(self, params, edge):
        report = assumption_report(params, np.full(15, edge - 4.0))
        assert report.zasm_statistic > 0
        assert report.yasm_statistic > 0
        assert report.selection_strength == pytest.approx(12.5)
