from collections.abc import Sequence
from pathlib import Path

from rich import print
from rich.markup import escape
from rich.style import Style
from rich.table import Table
from rich.text import Text

from passlog.config import CONSOLE, RunConfig
from passlog.evaluation import EvalReport
from passlog.type_defs import DetectionEvent, GroundTruth, NoiseProfile, PressureSignal

_TABLE_ROWS = (
    ("Events", "events_e", "e"),
    ("Detection", "detections_d", "d"),
    ("False positives", "false_positives_p", "p"),
    ("False negatives", "false_negatives_n", "n"),
    ("Efficacy", "efficacy_eta", "eta"),
)


def report_synth_summary(output: Path, truth_file: Path, signal: PressureSignal, truth: GroundTruth, seed: int) -> None:
    print(Text(f"{output}:", Style(color="cyan")))
    print(
        Text(
            f"  {signal.duration_s:g} s at {signal.sample_rate_hz:g} Hz, {len(truth.events)} pass-by(s), seed {seed}",
            Style(color="green"),
        )
    )
    print(Text(f"  ground truth -> {truth_file}", Style(color="bright_black")))


def report_detections(
    events: Sequence[DetectionEvent], noise: NoiseProfile, threshold: float, output: Path, seconds: float
) -> None:
    txt = Text(f"{output}:\n", Style(color="cyan"))
    for event in events:
        txt.append(f"  + {event.time_s:9.3f} s  w = {event.w_level:.6g}\n", Style(color="green"))
    print(txt)
    print(
        Text(
            f"n̄ = {noise.n_bar:.6g} over {noise.total_noise_duration_s:g} s of noise, threshold {threshold:.6g}",
            Style(color="bright_black"),
        )
    )
    print(Text(f"{len(events)} pass-by(s) detected in {seconds:.2}s.", Style(color="yellow")))


def report_sweep(parameter: str, rows: Sequence[tuple[float, int]]) -> None:
    table = Table(title=f"Detections per {parameter}")
    table.add_column(parameter, justify="right")
    table.add_column("events", justify="right")
    for value, count in rows:
        table.add_row(f"{value:g}", str(count))
    print(table)


def eval_table(report: EvalReport) -> Table:
    table = Table(title=f"Detection report (match tolerance {report.match_tolerance_s:g} s)")
    table.add_column("", style="bold")
    table.add_column("Vehicles", justify="right")
    table.add_column("R.D.", justify="right")

    ratios = report.ratios
    for label, field, key in _TABLE_ROWS:
        ratio = f"{ratios[key]:.2f}%" if ratios is not None else "-"
        table.add_row(label, str(getattr(report, field)), ratio)
    return table


def report_eval(report: EvalReport, json_file: Path | None) -> None:
    print(eval_table(report))
    if json_file:
        print(Text(f"Structured report -> {json_file}", Style(color="bright_black")))


def report_config(config: RunConfig) -> None:
    print(Text("Effective configuration:", Style(color="bright_black")))
    print(Text(config.model_dump_json(indent=2, exclude_none=True), Style(color="bright_black")))


def report_data_error(exc: BaseException) -> None:
    CONSOLE.print(f":boom: {escape(str(exc))}", style="bold red", highlight=False, soft_wrap=True)
