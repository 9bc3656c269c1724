from pathlib import Path

import pytest
from pydantic import ValidationError

from passlog.config import DetectorConfig, Settings, load_settings, settings_from_file, validated


class TestDetectorConfig:
    def test_defaults(self):
        config = DetectorConfig(noise_ranges=[(0.0, 10.0)])
        assert (config.t_c_s, config.q, config.decimation, config.refractory_s) == (3.0, 1.5, 480, 0.0)
        assert config.sigma_s == pytest.approx(1.0)
        assert config.backend == "fast"

    def test_sigma_follows_t_c(self):
        assert DetectorConfig(t_c_s=6.0, auto_noise=True).sigma_s == pytest.approx(2.0)
        assert DetectorConfig(t_c_s=6.0, sigma_s=0.5, auto_noise=True).sigma_s == 0.5

    def test_noise_ranges_from_text(self):
        config = DetectorConfig(noise_ranges="0:5,40:45.5")  # type: ignore[arg-type]
        assert config.noise_ranges == [(0.0, 5.0), (40.0, 45.5)]

    def test_requires_noise(self):
        with pytest.raises(ValidationError, match="No noise sections"):
            DetectorConfig()

    @pytest.mark.parametrize("ranges", [[(0.0, 5.0), (4.0, 8.0)], [(5.0, 5.0)], [(-1.0, 2.0)]])
    def test_invalid_ranges(self, ranges: list[tuple[float, float]]):
        with pytest.raises(ValidationError):
            DetectorConfig(noise_ranges=ranges)

    @pytest.mark.parametrize("field", ["t_c_s", "sigma_s", "q"])
    def test_positive(self, field: str):
        with pytest.raises(ValidationError):
            DetectorConfig.model_validate({field: 0.0, "auto_noise": True})


class TestSettings:
    def test_flags_override_file(self):
        settings = Settings(q=2.0, t_c=4.0).merged(q=1.2, t_c=None)
        assert (settings.q, settings.t_c) == (1.2, 4.0)

    def test_detector_values(self):
        settings = Settings(t_c=4.0, noise="0:10", refractory=0.5)
        config = DetectorConfig.model_validate(settings.detector_values())
        assert config.t_c_s == 4.0
        assert config.sigma_s == pytest.approx(4.0 / 3)
        assert config.noise_ranges == [(0.0, 10.0)]
        assert config.refractory_s == 0.5

    def test_from_file(self, tmp_path: Path):
        (tmp_path / "events.csv").write_text("t0_s\n1.0\n", encoding="utf-8")
        config_file = tmp_path / "passlog.toml"
        config_file.write_text('t_c = 3.5\nnoise = "0:8"\nevents = "events.csv"\nbit_depth = "16"\n', encoding="utf-8")
        settings = settings_from_file(config_file)
        assert settings.t_c == 3.5
        assert settings.events == tmp_path.resolve() / "events.csv"
        assert settings.bit_depth == "16"

    def test_output_and_sweep_keys(self, tmp_path: Path):
        config_file = tmp_path / "passlog.toml"
        config_file.write_text(
            'output = "out/detections.csv"\ntrace = "traces"\nq_sweep = "0.5,1.5"\nsigma_sweep = [0.3, 0.6]\n'
            'counts = "141,139,6,8"\nverbose = true\n',
            encoding="utf-8",
        )
        settings = settings_from_file(config_file)
        assert settings.output == tmp_path.resolve() / "out" / "detections.csv"
        assert settings.trace == tmp_path.resolve() / "traces"
        assert settings.q_sweep == [0.5, 1.5]
        assert settings.sigma_sweep == [0.3, 0.6]
        assert settings.counts == "141,139,6,8"
        assert settings.verbose is True

    def test_bad_sweep_key(self, tmp_path: Path):
        config_file = tmp_path / "passlog.toml"
        config_file.write_text('q_sweep = "1,x"\n', encoding="utf-8")
        with pytest.raises(SystemExit) as exc_info:
            settings_from_file(config_file)
        assert exc_info.value.code == 1

    def test_unknown_key(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]):
        config_file = tmp_path / "passlog.toml"
        config_file.write_text("treshold = 2\n", encoding="utf-8")
        with pytest.raises(SystemExit) as exc_info:
            settings_from_file(config_file)
        assert exc_info.value.code == 1
        assert "Unknown configuration key" in capsys.readouterr().err

    def test_invalid_toml(self, tmp_path: Path):
        config_file = tmp_path / "passlog.toml"
        config_file.write_text("t_c = \n", encoding="utf-8")
        with pytest.raises(SystemExit) as exc_info:
            settings_from_file(config_file)
        assert exc_info.value.code == 1

    def test_located_in_working_directory(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
        (tmp_path / "passlog.toml").write_text("q = 2.5\n", encoding="utf-8")
        monkeypatch.chdir(tmp_path)
        assert load_settings(None).q == 2.5

    def test_no_file(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch):
        monkeypatch.chdir(tmp_path)
        assert load_settings(None) == Settings()


def test_validated_exits_on_error():
    with pytest.raises(SystemExit) as exc_info:
        validated(DetectorConfig, {"q": -1.0, "auto_noise": True})
    assert exc_info.value.code == 1
