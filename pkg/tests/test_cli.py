import json
from pathlib import Path

import pytest

from passlog.cli import passlog_app
from passlog.parsing import read_detections, read_ground_truth, write_ground_truth
from passlog.type_defs import GroundTruth, PassByEvent

from .conftest import NOISE_AMPLITUDE, PASSBY_TIMES


def run(*args: str) -> int:
    try:
        passlog_app(list(args))
    except SystemExit as exc:
        return int(exc.code or 0)
    return 0


@pytest.fixture(autouse=True)
def workdir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def events_file(workdir: Path) -> Path:
    path = workdir / "events.csv"
    write_ground_truth(path, GroundTruth(events=[PassByEvent(t0_s=t0) for t0 in PASSBY_TIMES]))
    return path


@pytest.fixture
def recording(workdir: Path, events_file: Path) -> Path:
    output = workdir / "rec.wav"
    code = run(
        "synth",
        "--duration", "89.5",
        "--events", str(events_file),
        "--noise-amplitude", str(NOISE_AMPLITUDE),
        "--seed", "7",
        "-o", str(output),
    )  # fmt: skip
    assert code == 0
    return output


DETECT_FLAGS = ("--t-c", "3", "--sigma", "0.6", "--noise", "0:8")


class TestSynth:
    def test_writes_recording_and_truth(self, recording: Path, events_file: Path):
        assert recording.exists()
        assert read_ground_truth(recording.with_name("rec.truth.csv")) == read_ground_truth(events_file)

    def test_same_seed_same_bytes(self, workdir: Path):
        for name in ("a.wav", "b.wav"):
            assert run("synth", "--duration", "20", "--count", "2", "--seed", "4", "-o", str(workdir / name)) == 0
        assert (workdir / "a.wav").read_bytes() == (workdir / "b.wav").read_bytes()

    def test_random_events(self, workdir: Path):
        assert run("synth", "--duration", "60", "--count", "3", "--min-gap", "10", "-o", str(workdir / "r.wav")) == 0
        times = read_ground_truth(workdir / "r.truth.csv").times
        assert len(times) == 3
        assert all(5.0 <= t <= 55.0 for t in times)

    def test_pure_noise(self, workdir: Path):
        assert run("synth", "--duration", "10", "--bit-depth", "float32", "-o", str(workdir / "n.wav")) == 0
        assert read_ground_truth(workdir / "n.truth.csv").events == []

    def test_duration_required(self, workdir: Path):
        assert run("synth", "-o", str(workdir / "x.wav")) == 1

    def test_schedule_does_not_fit(self, workdir: Path):
        assert run("synth", "--duration", "20", "--count", "10", "-o", str(workdir / "x.wav")) == 1

    def test_output_from_config_file(self, workdir: Path):
        (workdir / "passlog.toml").write_text('duration = 12.0\noutput = "quiet.wav"\n', encoding="utf-8")
        assert run("synth") == 0
        assert (workdir / "quiet.wav").exists()
        assert (workdir / "quiet.truth.csv").exists()

    def test_events_outside_recording(self, workdir: Path, events_file: Path):
        assert run("synth", "--duration", "30", "--events", str(events_file), "-o", str(workdir / "x.wav")) == 1


class TestDetect:
    def test_detect_then_eval(self, workdir: Path, recording: Path):
        assert run("detect", str(recording), *DETECT_FLAGS) == 0
        detections = workdir / "rec.detections.csv"
        assert len(read_detections(detections)) == 7

        report_file = workdir / "report.json"
        code = run(
            "eval", str(detections), str(workdir / "rec.truth.csv"), "--tolerance", "1", "--output", str(report_file)
        )
        assert code == 0
        document = json.loads(report_file.read_text(encoding="utf-8"))
        assert document["report"]["false_positives_p"] == 0
        assert document["report"]["false_negatives_n"] == 0
        assert document["report"]["efficacy_eta"] == 7
        assert document["config"]["tolerance_s"] == 1.0

    def test_byte_stable(self, workdir: Path, recording: Path):
        for name in ("first.csv", "second.csv"):
            assert run("detect", str(recording), *DETECT_FLAGS, "-o", str(workdir / name)) == 0
        assert (workdir / "first.csv").read_bytes() == (workdir / "second.csv").read_bytes()

    def test_traces_and_sweeps(self, workdir: Path, recording: Path):
        code = run(
            "detect", str(recording), *DETECT_FLAGS,
            "--trace", str(workdir / "traces"),
            "--q-sweep", "0.5,1.0,1.5,3.0",
            "--sigma-sweep", "0.3,0.6",
        )  # fmt: skip
        assert code == 0
        names = {path.name for path in (workdir / "traces").iterdir()}
        assert names == {
            "original.csv",
            "rectified.csv",
            "decimated.csv",
            "smoothed.csv",
            "first_derivative.csv",
            "second_derivative.csv",
            "minima.csv",
            "selected.csv",
            "original_selected.csv",
        }
        selected = (workdir / "traces" / "selected.csv").read_text(encoding="utf-8").splitlines()
        assert selected[0] == "time_s,value"
        assert len(selected) == 1 + len(PASSBY_TIMES)
        assert all(float(line.split(",")[1]) < 0 for line in selected[1:])
        original = (workdir / "traces" / "original_selected.csv").read_text(encoding="utf-8").splitlines()
        assert [line.split(",")[0] for line in original] == [line.split(",")[0] for line in selected]

    def test_config_file(self, workdir: Path, recording: Path):
        (workdir / "passlog.toml").write_text(
            't_c = 3.0\nsigma = 0.6\nnoise = "0:8"\n', encoding="utf-8"
        )
        assert run("detect", str(recording), "-o", str(workdir / "from_file.csv")) == 0
        assert len(read_detections(workdir / "from_file.csv")) == 7

    def test_every_option_from_config_file(self, workdir: Path, recording: Path):
        (workdir / "passlog.toml").write_text(
            't_c = 3.0\nsigma = 0.6\nnoise = "0:8"\noutput = "found.csv"\ntrace = "stages"\n'
            'q_sweep = "1.5,3.0"\nsigma_sweep = "0.6"\nverbose = true\n',
            encoding="utf-8",
        )
        assert run("detect", str(recording)) == 0
        assert len(read_detections(workdir / "found.csv")) == 7
        assert (workdir / "stages" / "original_selected.csv").exists()

    def test_missing_noise_sections(self, recording: Path):
        assert run("detect", str(recording)) == 1

    def test_bad_sweep_values(self, recording: Path):
        assert run("detect", str(recording), *DETECT_FLAGS, "--q-sweep", "1,x") == 1

    def test_not_audio(self, workdir: Path):
        path = workdir / "notes.wav"
        path.write_text("not a recording", encoding="utf-8")
        assert run("detect", str(path), "--noise", "0:1") == 2

    def test_noise_range_beyond_recording(self, recording: Path):
        assert run("detect", str(recording), "--noise", "80:100") == 2


class TestEval:
    def test_published_counts(self, workdir: Path):
        report_file = workdir / "table.json"
        assert run("eval", "--counts", "141,139,6,8", "--output", str(report_file)) == 0
        report = json.loads(report_file.read_text(encoding="utf-8"))["report"]
        assert report["efficacy_eta"] == 133
        assert round(report["ratios"]["eta"], 2) == 94.33

    def test_inconsistent_counts(self):
        assert run("eval", "--counts", "10,9,1,5") == 1

    def test_no_detections(self, workdir: Path, events_file: Path):
        detections = workdir / "empty.csv"
        detections.write_text("time_s,w_level\n", encoding="utf-8")
        report_file = workdir / "r.json"
        assert run("eval", str(detections), str(events_file), "-o", str(report_file)) == 0
        report = json.loads(report_file.read_text(encoding="utf-8"))["report"]
        assert report["false_negatives_n"] == len(PASSBY_TIMES)
        assert report["efficacy_eta"] == 0

    def test_malformed_detections(self, workdir: Path, events_file: Path, capsys: pytest.CaptureFixture[str]):
        detections = workdir / "bad.csv"
        detections.write_text("time_s,w_level\n1.0,2.0,3.0\n", encoding="utf-8")
        assert run("eval", str(detections), str(events_file)) == 2
        assert "bad.csv:2:" in capsys.readouterr().err

    def test_tolerance_from_config(self, workdir: Path):
        (workdir / "passlog.toml").write_text("tolerance = 1.5\n", encoding="utf-8")
        report_file = workdir / "r.json"
        assert run("eval", "--counts", "5,5,0,0", "-o", str(report_file)) == 0
        assert json.loads(report_file.read_text(encoding="utf-8"))["config"]["tolerance_s"] == 1.5
        assert run("eval", "--counts", "5,5,0,0", "--tolerance", "0.5", "-o", str(report_file)) == 0
        assert json.loads(report_file.read_text(encoding="utf-8"))["config"]["tolerance_s"] == 0.5

    def test_counts_from_config_file(self, workdir: Path):
        (workdir / "passlog.toml").write_text('counts = "141,139,6,8"\noutput = "table.json"\n', encoding="utf-8")
        assert run("eval") == 0
        report = json.loads((workdir / "table.json").read_text(encoding="utf-8"))["report"]
        assert report["efficacy_eta"] == 133

    def test_nothing_to_score(self):
        assert run("eval") == 1
