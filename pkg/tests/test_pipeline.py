import json
import logging
import math

import numpy as np
import pytest

from src.geometry.errors import ConfigError, NumericError
from src.geometry.exactlaw import ModelParams, log_sf_cdf
from src.pipeline import __version__
from src.pipeline import main as cli
from src.pipeline.config import ExperimentConfig, IntensitySpec, RuntimeSettings
from src.pipeline.data_loaders import canonical_hash, file_hash, load_config_file, load_frame
from src.pipeline.experiments import ExperimentRunner


@pytest.fixture
def settings(tmp_path):
    return RuntimeSettings(base_dir=tmp_path, outputs_dir=tmp_path / "outputs")


def _config(**payload):
    return ExperimentConfig.build(payload)


# ---------------------------------------------------------------------------
# configuration


def test_config_errors_name_the_field():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.build({"kind": "sf-cdf", "d": 1})
    assert "d:" in str(info.value)
    with pytest.raises(ConfigError):
        ExperimentConfig.build({"kind": "no-such-kind"})
    with pytest.raises(ConfigError):
        ExperimentConfig.build({"kind": "sf-cdf", "d_ladder": [16, 8]})
    with pytest.raises(ConfigError):
        ExperimentConfig.build({"kind": "sf-cdf", "d": 4, "r_grid": [0.5, 1.5]})


def test_covering_defaults():
    config = _config(kind="gumbel-md", d=64, intensity={"x": 1.0})
    assert config.alpha_form == "displayed"
    assert config.total_intensity == "sphere-measure"


def test_intensity_needs_exactly_one_source():
    with pytest.raises(ConfigError):
        ExperimentConfig.build({"kind": "sf-cdf", "d": 4, "intensity": {"L": 1.0, "x": 1.0}})
    with pytest.raises(ConfigError):
        ExperimentConfig.build({"kind": "sf-cdf", "d": 4, "intensity": {}})


def test_intensity_recipes():
    spec = IntensitySpec(coef=1.0, power=0.5, log_power=1.0)
    assert spec.log_intensity(100) == pytest.approx(10.0 * math.log(100.0))
    assert spec.resolve_regime().kind.value == "subcritical"
    assert IntensitySpec(x=1.0, y=2.0).params(50).L == pytest.approx(52.0)
    assert IntensitySpec(volume_x=1.0).log_intensity(8) == pytest.approx(4.0 * math.log(4.0))
    assert IntensitySpec(L=5.0, regime="supercritical").resolve_regime().kind.value == "supercritical"
    assert IntensitySpec(x=2.0, regime="critical").resolve_regime().x == 2.0


def test_missing_dimension_or_intensity_is_reported():
    config = _config(kind="sf-cdf")
    with pytest.raises(ConfigError):
        config.dimensions
    with pytest.raises(ConfigError):
        config.require_intensity()


def test_config_hash_is_canonical():
    first = _config(kind="sf-cdf", d=10, intensity={"L": 2.0}).echo()
    second = dict(reversed(list(first.items())))
    assert canonical_hash(first) == canonical_hash(second)


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(broken)
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(listing)


def test_runtime_settings_from_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PPL_WORKERS", "3")
    monkeypatch.setenv("PPL_LOG_LEVEL", "debug")
    monkeypatch.setenv("PPL_SERIES_MAX_TERMS", "0")
    monkeypatch.delenv("PPL_SERIES_MAX_TERMS")
    monkeypatch.delenv("PPL_OUTPUTS_DIR", raising=False)
    (tmp_path / ".env").write_text("PPL_SERIES_MAX_TERMS=5000\n", encoding="utf-8")
    settings = RuntimeSettings.from_env(base_dir=tmp_path)
    assert settings.workers == 3
    assert settings.series_max_terms == 5000
    assert settings.resolved_log_level == logging.DEBUG
    assert settings.outputs_dir == tmp_path / "outputs"
    assert settings.outputs_dir.is_dir()


def test_runtime_settings_rejects_bad_values(tmp_path, monkeypatch):
    monkeypatch.setenv("PPL_WORKERS", "many")
    with pytest.raises(ConfigError):
        RuntimeSettings.from_env(base_dir=tmp_path)
    monkeypatch.setenv("PPL_WORKERS", "0")
    with pytest.raises(ConfigError):
        RuntimeSettings.from_env(base_dir=tmp_path)


# ---------------------------------------------------------------------------
# experiments


def test_sf_cdf_matches_direct_evaluation(settings):
    config = _config(kind="sf-cdf", d=10, intensity={"L": math.log(100.0)}, r_grid=[0.0, 0.3, 0.7, 1.0])
    result = cli.run(config, settings)
    frame = load_frame(result.csv_path)
    params = ModelParams(d=10, L=math.log(100.0))
    assert list(frame["r"]) == [0.0, 0.3, 0.7, 1.0]
    for r, value in zip(frame["r"], frame["log_cdf"]):
        # written with 17 significant digits, read back bit for bit
        assert value == log_sf_cdf(params, float(r))


def test_meta_file(settings):
    config = _config(kind="sf-cdf", d=10, intensity={"L": 2.0}, r_points=5, out=str(settings.base_dir / "run"))
    result = cli.run(config, settings)
    assert result.csv_path == settings.base_dir / "run.csv"
    meta = json.loads(result.meta_path.read_text(encoding="utf-8"))
    assert meta["version"] == __version__
    assert meta["seed"] == 0
    assert meta["config_sha256"] == canonical_hash(config.echo())
    assert meta["csv_sha256"] == file_hash(result.csv_path)
    assert meta["config"]["kind"] == "sf-cdf"


def test_runs_are_reproducible_across_worker_counts(settings, tmp_path):
    payload = dict(kind="sf-sample", d=10, intensity={"L": math.log(100.0)}, reps=200, seed=42)
    first = cli.run(_config(**payload, out=str(tmp_path / "a")), settings)
    second = cli.run(_config(**payload, out=str(tmp_path / "b")), settings)
    third = cli.run(_config(**payload, out=str(tmp_path / "c"), workers=4), settings)
    assert first.csv_path.read_bytes() == second.csv_path.read_bytes() == third.csv_path.read_bytes()
    other = cli.run(_config(**{**payload, "seed": 43}, out=str(tmp_path / "d")), settings)
    assert other.csv_path.read_bytes() != first.csv_path.read_bytes()


def test_sf_sample_summary():
    config = _config(kind="sf-sample", d=10, intensity={"L": math.log(100.0)}, reps=500, seed=1)
    frame, summary = ExperimentRunner(config).run()
    assert (frame["row_type"] == "data").sum() == 500
    assert summary["10"]["ks_exact"] < 0.1


def test_regimes_table_critical():
    config = _config(kind="regimes-table", d_ladder=[256, 1024], intensity={"x": 1.0, "regime": "critical"})
    frame, summary = ExperimentRunner(config).run()
    assert summary["regime"] == "critical"
    assert list(frame["d"]) == [256, 1024]
    assert frame["relative_error"].iloc[-1] < 0.05
    assert np.all(frame["origin_probability"] == 1.0)
    assert np.all(frame["radius_vector_kind"] == "unknown")


def test_gumbel_1d_runs():
    config = _config(kind="gumbel-1d", d=512, intensity={"x": 1.0, "regime": "critical"}, reps=300, seed=2)
    frame, summary = ExperimentRunner(config).run()
    assert np.isfinite(frame.loc[frame["row_type"] == "data", "statistic"]).all()
    assert summary["512"]["ks_gumbel"] < 0.2


def test_polysim_crosscheck_runs():
    config = _config(kind="polysim-crosscheck", d=3, intensity={"L": math.log(30.0)}, reps=40, r_grid=[0.2, 0.5])
    frame, summary = ExperimentRunner(config).run()
    levels = frame[frame["row_type"] == "level"]
    assert list(levels["r"]) == [0.2, 0.5]
    assert levels["p_sf_dm_at_least"].between(0.0, 1.0).all()
    assert 0.0 <= summary["3"]["origin_frequency"] <= 1.0


def test_covering_crosscheck_needs_planar_projection():
    config = _config(kind="covering-crosscheck", d=12, m=3, intensity={"L": math.log(2000.0)}, reps=5)
    with pytest.raises(ConfigError):
        ExperimentRunner(config).run()


def test_covering_crosscheck_runs():
    config = _config(kind="covering-crosscheck", d=12, intensity={"L": math.log(2000.0)}, reps=30, r_grid=[0.7])
    frame, _ = ExperimentRunner(config).run()
    row = frame.iloc[0]
    for column in ("p_polysim", "p_cover_point_count", "p_cover_sphere_measure", "gap_count_point_count"):
        assert 0.0 <= row[column] <= 1.0


def test_volume_ratio_runs():
    config = _config(kind="volume-ratio", d=3, intensity={"L": math.log(40.0)}, reps=3, n_dirs=2)
    frame, summary = ExperimentRunner(config).run()
    assert 0.0 < summary["3"]["volume_ratio"] < 1.0
    assert frame["prediction_kind"].iloc[0] in ("conjecture-log-ratio", "conjecture-deficit")


def test_gumbel_md_runs():
    config = _config(
        kind="gumbel-md", d=64, intensity={"x": 1.0, "regime": "critical"}, reps=20, tau_grid=[0.0], seed=5
    )
    frame, summary = ExperimentRunner(config).run()
    tau_row = frame[frame["row_type"] == "tau"].iloc[0]
    assert 0.0 <= tau_row["covering_probability"] <= 1.0
    assert tau_row["gumbel_limit"] == pytest.approx(math.exp(-1.0))
    samples = frame[frame["row_type"] == "sample"]
    assert len(samples) == 20
    assert samples["statistic_calibrated"].notna().all()
    assert 0.0 <= summary["64"]["censored_fraction"] <= 1.0
    assert 0.0 <= summary["64"]["ks_gumbel_calibrated"] <= 1.0


def test_appendix_verify_runs():
    config = _config(
        kind="appendix-verify",
        d_ladder=[1000, 2000],
        intensity={"x": 1.0, "regime": "critical"},
        grid_points=200,
        tau_grid=[0.0],
    )
    frame, summary = ExperimentRunner(config).run()
    appendix = frame[frame["row_type"] == "appendix"]
    assert appendix["ratio_ok"].all()
    assert math.isfinite(summary["w1_scaled_spread"])
    janson = frame[frame["row_type"] == "janson"]
    assert (janson["inverse_a_relative_error"] < 0.1).all()


# ---------------------------------------------------------------------------
# command line


def _main(tmp_path, *argv):
    return cli.main([*argv, "--base-dir", str(tmp_path), "--outputs-dir", str(tmp_path / "out")])


def test_cli_success_prints_summary(tmp_path, capsys):
    code = _main(tmp_path, "sf-cdf", "--d", "10", "--L", "2.0")
    assert code == cli.EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert printed["csv"].endswith("sf-cdf.csv")
    assert (tmp_path / "out" / "sf-cdf.meta.json").exists()


def test_cli_ladder_and_critical_intensity(tmp_path):
    assert _main(tmp_path, "regimes-table", "--d", "64", "128", "--x", "1.0") == cli.EXIT_OK
    frame = load_frame(tmp_path / "out" / "regimes-table.csv")
    assert list(frame["d"]) == [64, 128]


def test_cli_config_errors(tmp_path, capsys):
    assert _main(tmp_path, "sf-cdf", "--L", "2.0") == cli.EXIT_CONFIG
    assert _main(tmp_path, "sf-cdf", "--d", "10", "--L", "2.0", "--x", "1.0") == cli.EXIT_CONFIG
    assert _main(tmp_path, "sf-cdf", "--d", "1", "--L", "2.0") == cli.EXIT_CONFIG
    assert _main(tmp_path, "sf-cdf", "--config", str(tmp_path / "missing.json")) == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_cli_config_file_with_overrides(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({"d": 8, "intensity": {"L": 3.0}, "r_points": 3}), encoding="utf-8")
    assert _main(tmp_path, "sf-cdf", "--config", str(path), "--d", "9") == cli.EXIT_OK
    frame = load_frame(tmp_path / "out" / "sf-cdf.csv")
    assert set(frame["d"]) == {9}
    assert len(frame) == 3


def test_cli_resource_cap(tmp_path):
    code = _main(tmp_path, "polysim-crosscheck", "--d", "3", "--L", "20", "--reps", "1")
    assert code == cli.EXIT_RESOURCE


def test_cli_numeric_failure(tmp_path, monkeypatch):
    def fail(self):
        raise NumericError("series did not converge")

    monkeypatch.setattr(ExperimentRunner, "run", fail)
    assert _main(tmp_path, "sf-cdf", "--d", "10", "--L", "2.0") == cli.EXIT_NUMERIC
