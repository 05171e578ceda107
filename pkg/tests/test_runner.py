"""
Tests para el runner: carga de configuración, artefactos y códigos de salida.

Los experimentos Monte Carlo se corren con pocas réplicas; los criterios
estadísticos completos viven en scripts/run_acceptance.py.
"""

import json

import pytest
from pydantic import ValidationError

from bbmwave.main import EXIT_FAILED, EXIT_INVALID, EXIT_OK, load_config, main, run
from bbmwave.models import ExperimentConfig, ExperimentName
from theory.errors import UsageError


# Helpers


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


SIMULATE = {
    "experiment": "simulate",
    "params": {"rho": 0.5, "beta": 0.01, "delta": 0.5},
    "init": {"kind": "point", "x": 0.0},
    "barrier": {"kind": "none"},
    "horizon": 1.0,
    "snapshot_times": [0.5],
    "replicas": 20,
    "seed": 11,
    "record_particles": True,
}


# Carga de configuración


class TestLoadConfig:
    """JSON → ExperimentConfig con overrides."""

    def test_overrides(self, tmp_path):
        path = _write_config(tmp_path, SIMULATE)
        config = load_config(path, experiment="simulate", seed=99, out="x", replicas=7)
        assert config.seed == 99
        assert config.outputs == "x"
        assert config.replicas == 7

    def test_experimento_tomado_de_la_cli(self, tmp_path):
        payload = {k: v for k, v in SIMULATE.items() if k != "experiment"}
        config = load_config(_write_config(tmp_path, payload), experiment="simulate")
        assert config.experiment == ExperimentName.SIMULATE

    def test_experimento_no_coincide(self, tmp_path):
        with pytest.raises(UsageError):
            load_config(_write_config(tmp_path, SIMULATE), experiment="hits")

    def test_archivo_inexistente(self, tmp_path):
        with pytest.raises(UsageError):
            load_config(tmp_path / "no_existe.json")

    def test_json_invalido(self, tmp_path):
        path = tmp_path / "roto.json"
        path.write_text("{experiment:", encoding="utf-8")
        with pytest.raises(UsageError):
            load_config(path)

    def test_clave_desconocida(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(_write_config(tmp_path, {**SIMULATE, "particles": 3}))

    def test_montecarlo_sin_replicas(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(_write_config(tmp_path, {**SIMULATE, "replicas": 0}))

    def test_snapshot_fuera_del_horizonte(self, tmp_path):
        with pytest.raises(ValidationError):
            load_config(_write_config(tmp_path, {**SIMULATE, "snapshot_times": [2.0]}))

    def test_ida_y_vuelta_json(self, tmp_path):
        config = load_config(_write_config(tmp_path, SIMULATE))
        again = ExperimentConfig.model_validate_json(config.model_dump_json())
        assert again == config

    def test_configs_del_repositorio_validan(self):
        from bbmwave.config import PROJECT_ROOT

        for experiment in ExperimentName:
            path = PROJECT_ROOT / "configs" / f"{experiment.value}.json"
            assert load_config(path, experiment=experiment.value).experiment == experiment


# Ejecución


class TestRun:
    """run() escribe artefactos y traduce errores a códigos de salida."""

    def test_heuristic_curve(self, tmp_path, test_settings):
        config = ExperimentConfig(experiment="heuristic-curve", outputs=str(tmp_path / "hc"))
        assert run(config, test_settings) == EXIT_OK
        manifest = _read_json(tmp_path / "hc" / "manifest.json")
        metrics = _read_json(tmp_path / "hc" / "metrics.json")
        assert manifest["status"] == "ok"
        assert "heuristic_curve.csv" in manifest["artifacts"]
        assert metrics["g0"] == pytest.approx(metrics["g0_closed_form"])
        assert metrics["action_identity_max_error"] <= 1e-7

    def test_calibrate(self, tmp_path, test_settings):
        config = ExperimentConfig(experiment="calibrate", outputs=str(tmp_path / "cal"))
        assert run(config, test_settings) == EXIT_OK
        metrics = _read_json(tmp_path / "cal" / "metrics.json")
        assert metrics["round_trip_log_N_error"] <= 1e-6
        assert metrics["mapping"]["beta"] == pytest.approx(1e-4)

    def test_salida_por_defecto(self, test_settings):
        config = ExperimentConfig(experiment="calibrate")
        assert run(config, test_settings) == EXIT_OK
        assert (test_settings.output_path / "calibrate" / "metrics.json").is_file()

    def test_simulate_determinista(self, tmp_path, test_settings):
        outputs = []
        for name in ("a", "b"):
            config = ExperimentConfig.model_validate({**SIMULATE, "outputs": str(tmp_path / name)})
            assert run(config, test_settings) == EXIT_OK
            outputs.append(tmp_path / name)
        for artifact in ("metrics.json", "summary.csv", "snapshots.csv"):
            first = (outputs[0] / artifact).read_bytes()
            assert first == (outputs[1] / artifact).read_bytes()

    def test_simulate_compara_con_forma_cerrada(self, tmp_path, test_settings):
        config = ExperimentConfig.model_validate({**SIMULATE, "outputs": str(tmp_path / "s")})
        assert run(config, test_settings) == EXIT_OK
        metrics = _read_json(tmp_path / "s" / "metrics.json")
        assert [row["time"] for row in metrics["free_comparison"]["mass"]] == [0.5, 1.0]
        assert metrics["replicas"] == 20

    def test_martingala_sin_barrera(self, tmp_path, test_settings):
        config = ExperimentConfig.model_validate(
            {**SIMULATE, "experiment": "martingale", "outputs": str(tmp_path / "m")}
        )
        assert run(config, test_settings) == EXIT_INVALID
        manifest = _read_json(tmp_path / "m" / "manifest.json")
        assert manifest["status"] == "failed"
        assert manifest["error"]["type"] == "UsageError"
        assert not (tmp_path / "m" / "metrics.json").exists()

    def test_capacidad_excedida(self, tmp_path, test_settings):
        config = ExperimentConfig.model_validate(
            {
                **SIMULATE,
                "horizon": 5.0,
                "step": {"particle_budget": 1},
                "outputs": str(tmp_path / "cap"),
            }
        )
        assert run(config, test_settings) == EXIT_FAILED
        error = _read_json(tmp_path / "cap" / "manifest.json")["error"]
        assert error["type"] == "CapacityError"
        assert 0 <= error["replica"] < 20
        assert "partial_event_log" in error


# Experimentos restantes


EDGE_CLOUD = {
    "params": {"rho": 0.5, "beta": 0.01, "delta": 0.5},
    "init": {"kind": "edge_cloud", "u": 4.0},
    "barrier": {"kind": "none"},
    "horizon": 2.0,
    "replicas": 8,
    "seed": 5,
}


def _run_ok(tmp_path, test_settings, payload, name):
    config = ExperimentConfig.model_validate({**payload, "outputs": str(tmp_path / name)})
    assert run(config, test_settings) == EXIT_OK
    manifest = _read_json(tmp_path / name / "manifest.json")
    assert manifest["status"] == "ok"
    return manifest, _read_json(tmp_path / name / "metrics.json")


class TestExperimentRunners:
    """Cada experimento corre de punta a punta y deja sus métricas."""

    def test_verify_airy(self, tmp_path, test_settings):
        manifest, metrics = _run_ok(tmp_path, test_settings, {"experiment": "verify-airy"}, "va")
        assert "airy_zeros.csv" in manifest["artifacts"]
        assert len(metrics["zeros"]) == 10
        assert metrics["gamma1"] == pytest.approx(-2.338107410459767, abs=1e-10)
        assert metrics["ode_residual"] < 1e-6
        assert metrics["ode_residual_pointwise"] < 1e-6
        assert metrics["orthogonality_offdiagonal_max"] < 1e-7
        assert metrics["switchover_max_abs_ai"] < 1e-8

    def test_verify_density(self, tmp_path, test_settings):
        payload = {"experiment": "verify-density", "series": {"max_terms": 512}}
        manifest, metrics = _run_ok(tmp_path, test_settings, payload, "vd")
        assert "density_curve.csv" in manifest["artifacts"]
        assert metrics["chapman_kolmogorov_max_error"] <= 1e-6
        assert metrics["free_mass_max_error"] <= 1e-8
        assert metrics["hit_rate_gate"]["relative_discrepancy"] <= 1e-4
        certified = [row for row in metrics["martingale_identity"] if row["certified"]]
        assert certified
        assert all(row["relative_error"] <= 1e-6 for row in certified)

    def test_hits(self, tmp_path, test_settings):
        payload = {
            "experiment": "hits",
            "init": {"kind": "point", "edge_offset": 1.0},
            "barrier": {"kind": "fixed", "A": 0.0},
            "horizon": 2.0,
            "replicas": 20,
            "seed": 3,
            "series": {"max_terms": 4096},
            "hits": {"u": 1.0, "v": 2.0, "bins": 2},
        }
        manifest, metrics = _run_ok(tmp_path, test_settings, payload, "hits")
        assert "hits.csv" in manifest["artifacts"]
        assert metrics["x0"] == pytest.approx(21.114 - 1.0, abs=1e-3)
        assert metrics["expected"] > 0
        assert metrics["observed"]["value"] >= 0
        assert len(metrics["hit_rate_gates"]) == 2
        assert "z_score" in metrics

    def test_hits_con_horizonte_corto(self, tmp_path, test_settings):
        payload = {
            "experiment": "hits",
            "init": {"kind": "point", "edge_offset": 1.0},
            "barrier": {"kind": "fixed", "A": 0.0},
            "horizon": 1.0,
            "replicas": 5,
            "hits": {"u": 0.5, "v": 2.0},
            "outputs": str(tmp_path / "short"),
        }
        config = ExperimentConfig.model_validate(payload)
        assert run(config, test_settings) == EXIT_INVALID

    @pytest.mark.parametrize(
        "experiment,label,csv",
        [("bulk-gauss", "normal", "bulk_cdf.csv"), ("edge-profile", "airy_edge", "edge_cdf.csv")],
    )
    def test_medidas(self, tmp_path, test_settings, experiment, label, csv):
        payload = {**EDGE_CLOUD, "experiment": experiment}
        manifest, metrics = _run_ok(tmp_path, test_settings, payload, experiment)
        assert csv in manifest["artifacts"]
        assert metrics["replicas"] == 8
        assert 1 <= metrics["surviving_replicas"] <= 8
        assert 0.0 <= metrics[f"ks_to_{label}"] <= 1.0
        assert metrics[f"w1_to_{label}"] >= 0.0
        assert metrics["atoms"] > 0

    def test_survival(self, tmp_path, test_settings):
        payload = {
            "experiment": "survival",
            "replicas": 30,
            "seed": 9,
            "survival": {"x": 10.0, "delta": 0.25, "horizon": 2.0},
        }
        manifest, metrics = _run_ok(tmp_path, test_settings, payload, "surv")
        assert "survival.csv" in manifest["artifacts"]
        assert metrics["horizon"] == 2.0
        assert [row["horizon"] for row in metrics["curve"]] == [0.5, 1.0, 2.0]
        assert metrics["monotone"] is True
        low, high = metrics["ci95"]
        assert 0.0 <= low <= metrics["p_hat"] <= high <= 1.0
        assert metrics["bound"] == pytest.approx(2.0 * 0.01 * 10.0 / 0.5)


class TestMain:
    """Entrada de línea de comandos."""

    def test_config_inexistente(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nada.json")]) == EXIT_INVALID

    def test_config_invalida(self, tmp_path):
        path = _write_config(tmp_path, {**SIMULATE, "replicas": -1})
        assert main(["simulate", "--config", str(path)]) == EXIT_INVALID

    def test_experimento_desconocido(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["teleport", "--config", str(tmp_path / "x.json")])
