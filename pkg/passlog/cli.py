import json
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from time import time
from typing import Annotated, Any, Literal

import cyclopts
import numpy as np
import soundfile as sf
from pydantic import ValidationError
from rich import print_json
from rich.logging import RichHandler
from rich.progress import track

from passlog.audio_io import read_wav, write_wav
from passlog.config import (
    CONSOLE,
    DetectorConfig,
    RunConfig,
    Settings,
    SynthConfig,
    load_settings,
    report_config_validation_errors,
    validated,
)
from passlog.detector import DetectionResult, detect, sigma_sweep, threshold_sweep
from passlog.evaluation import DEFAULT_TOLERANCE_S, EvalReport, report
from passlog.parsing import (
    parse_float_list,
    read_detections,
    read_ground_truth,
    write_detections,
    write_ground_truth,
    write_trace,
)
from passlog.printing import (
    report_config,
    report_data_error,
    report_detections,
    report_eval,
    report_synth_summary,
    report_sweep,
)
from passlog.synth import random_schedule, synthesize
from passlog.type_defs import PassByEvent

passlog_app = cyclopts.App(name="passlog", help="Count vehicle pass-bys in roadside recordings.")

EXIT_USAGE = 1
EXIT_DATA = 2

_ConfigFile = Annotated[
    Path | None,
    cyclopts.Parameter(
        help="A flat TOML file with one key per option (default: ./passlog.toml if present).",
        validator=cyclopts.validators.Path(exists=True, dir_okay=False),
    ),
]
_Verbose = Annotated[bool, cyclopts.Parameter(help="Log every pipeline stage.")]


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=CONSOLE, show_time=False, show_path=False)],
        force=True,
    )


@contextmanager
def _data_errors() -> Iterator[None]:
    """Turn unreadable or inconsistent input data into exit code 2."""
    try:
        yield
    except (ValueError, OSError, sf.LibsndfileError) as exc:
        report_data_error(exc)
        raise SystemExit(EXIT_DATA)


def _usage_error(message: str) -> SystemExit:
    report_data_error(ValueError(message))
    return SystemExit(EXIT_USAGE)


@passlog_app.command()
def synth(
    *,
    output: Annotated[
        Path | None, cyclopts.Parameter(name=["--output", "-o"], help="The WAV file to write.")
    ] = None,
    duration: Annotated[float | None, cyclopts.Parameter(help="Recording length in seconds.")] = None,
    events: Annotated[
        Path | None,
        cyclopts.Parameter(
            help="Pass-bys to render: a CSV file with header t0_s[,v_mps,d_m,source_level].",
            validator=cyclopts.validators.Path(exists=True, dir_okay=False),
        ),
    ] = None,
    count: Annotated[int | None, cyclopts.Parameter(help="Draw this many random pass-bys (no --events).")] = None,
    min_gap: Annotated[float | None, cyclopts.Parameter(help="Minimum gap between random pass-bys (s).")] = None,
    sample_rate: Annotated[float | None, cyclopts.Parameter(help="Sample rate in Hz (default 48000).")] = None,
    noise_amplitude: Annotated[float | None, cyclopts.Parameter(help="RMS of the background noise.")] = None,
    seed: Annotated[int | None, cyclopts.Parameter(help="Seed of every random stream.")] = None,
    bit_depth: Annotated[
        Literal["16", "24", "float32"] | None, cyclopts.Parameter(help="WAV sample format (default 24).")
    ] = None,
    config: _ConfigFile = None,
    verbose: _Verbose = False,
) -> None:
    """Render a synthetic roadside recording and its ground truth (<output>.truth.csv)."""
    settings = load_settings(config).merged(
        output=output,
        verbose=verbose or None,
        duration=duration,
        events=events,
        count=count,
        min_gap=min_gap,
        sample_rate=sample_rate,
        noise_amplitude=noise_amplitude,
        seed=seed,
        bit_depth=bit_depth,
    )
    configure_logging(bool(settings.verbose))
    output = settings.output
    if output is None:
        raise _usage_error("An output file is required (--output or `output` in the config file)")
    if settings.duration is None:
        raise _usage_error("A recording duration is required (--duration or `duration` in the config file)")
    if settings.events and settings.count is not None:
        raise _usage_error("Give either an events file or a random event count, not both")

    seed_value = settings.seed or 0
    if settings.events:
        with _data_errors():
            schedule = read_ground_truth(settings.events).events
    elif settings.count:
        try:
            schedule = random_schedule(
                settings.count,
                settings.duration,
                min_gap_s=settings.min_gap if settings.min_gap is not None else 8.0,
                rng_seed=seed_value,
                margin_s=5.0,
            )
        except ValueError as exc:
            raise _usage_error(str(exc))
    else:
        schedule = list[PassByEvent]()

    values: dict[str, Any] = {"duration_s": settings.duration, "events": schedule, "rng_seed": seed_value}
    if settings.sample_rate is not None:
        values["sample_rate_hz"] = settings.sample_rate
    if settings.noise_amplitude is not None:
        values["noise_amplitude"] = settings.noise_amplitude
    synth_config = validated(SynthConfig, values)

    truth_file = output.with_name(f"{output.stem}.truth.csv")
    with _data_errors():
        signal, truth = synthesize(synth_config)
        write_wav(signal, output, settings.bit_depth or "24")
        write_ground_truth(truth_file, truth)

    report_synth_summary(output, truth_file, signal, truth, seed_value)


def _write_traces(trace_dir: Path, result: DetectionResult) -> None:
    traces = result.traces
    trace_dir.mkdir(parents=True, exist_ok=True)
    series = {
        "original": (traces.original.times(), traces.original.samples),
        "rectified": (traces.rectified.times(), traces.rectified.samples),
        "decimated": (traces.decimated.times(), traces.decimated.samples),
        "smoothed": (traces.smoothed.times(), traces.smoothed.values),
        "first_derivative": (traces.first_derivative.times(), traces.first_derivative.values),
        "second_derivative": (traces.second_derivative.times(), traces.second_derivative.values),
    }
    for name, (times, values) in track(series.items(), description="Writing traces...", console=CONSOLE):
        write_trace(trace_dir / f"{name}.csv", times, values)

    w2_times = traces.second_derivative.times()
    minima = traces.candidates
    write_trace(trace_dir / "minima.csv", w2_times[minima], traces.second_derivative.values[minima])
    selected = traces.selected
    write_trace(trace_dir / "selected.csv", w2_times[selected], traces.second_derivative.values[selected])

    original = traces.original
    selected_times = w2_times[selected]
    at_samples = np.clip(np.round(selected_times * original.sample_rate_hz).astype(int), 0, original.samples.size - 1)
    write_trace(trace_dir / "original_selected.csv", selected_times, original.samples[at_samples])


@passlog_app.command(name="detect")
def detect_command(
    input: Annotated[
        Path,
        cyclopts.Parameter(
            help="The recording to analyse (WAV, PCM 16/24-bit or float32).",
            validator=cyclopts.validators.Path(exists=True, dir_okay=False),
        ),
    ],
    *,
    output: Annotated[
        Path | None,
        cyclopts.Parameter(name=["--output", "-o"], help="Detections file (default: <input>.detections.csv)."),
    ] = None,
    noise: Annotated[
        str | None, cyclopts.Parameter(help="Vehicle-free sections, as start:end[,start:end...] in seconds.")
    ] = None,
    auto_noise: Annotated[
        bool, cyclopts.Parameter(help="Estimate the noise level from the quietest blocks instead.")
    ] = False,
    t_c: Annotated[float | None, cyclopts.Parameter(help="Gaussian centre time in seconds (default 3).")] = None,
    sigma: Annotated[float | None, cyclopts.Parameter(help="Gaussian width in seconds (default t_c / 3).")] = None,
    q: Annotated[
        float | None, cyclopts.Parameter(help="Threshold multiplier of the noise level (default 1.5).")
    ] = None,
    decimation: Annotated[int | None, cyclopts.Parameter(help="Envelope decimation factor (default 480).")] = None,
    refractory: Annotated[
        float | None, cyclopts.Parameter(help="Drop detections closer than this to the previous one (s).")
    ] = None,
    backend: Annotated[
        Literal["fast", "direct"] | None, cyclopts.Parameter(help="Convolution backend (default fast).")
    ] = None,
    trace: Annotated[Path | None, cyclopts.Parameter(help="Directory receiving one CSV per stage.")] = None,
    q_sweep: Annotated[str | None, cyclopts.Parameter(help="Also count events for these q values (a,b,...).")] = None,
    sigma_sweep_values: Annotated[
        str | None, cyclopts.Parameter(name="--sigma-sweep", help="Also count events for these σ values (a,b,...).")
    ] = None,
    config: _ConfigFile = None,
    verbose: _Verbose = False,
) -> None:
    """Detect pass-bys in a recording."""
    try:
        q_values = parse_float_list(q_sweep) if q_sweep else None
        sigma_values = parse_float_list(sigma_sweep_values) if sigma_sweep_values else None
    except ValueError as exc:
        raise _usage_error(str(exc))

    settings: Settings = load_settings(config).merged(
        output=output,
        verbose=verbose or None,
        trace=trace,
        q_sweep=q_values,
        sigma_sweep=sigma_values,
        noise=noise,
        auto_noise=auto_noise or None,
        t_c=t_c,
        sigma=sigma,
        q=q,
        decimation=decimation,
        refractory=refractory,
        backend=backend,
    )
    configure_logging(bool(settings.verbose))
    detector_config = validated(DetectorConfig, settings.detector_values())
    output = settings.output or input.with_name(f"{input.stem}.detections.csv")

    run_config = RunConfig(command="detect", input=input, output=output, detector=detector_config)
    report_config(run_config)

    with _data_errors():
        t1 = time()
        signal = read_wav(input)
        result = detect(signal, detector_config)
        t2 = time()
        write_detections(output, result.events)
        report_detections(result.events, result.noise, result.traces.threshold, output, seconds=t2 - t1)

        if settings.trace:
            _write_traces(settings.trace, result)
        if settings.q_sweep:
            report_sweep("q", threshold_sweep(signal, detector_config, sorted(settings.q_sweep)))
        if settings.sigma_sweep:
            report_sweep("σ (s)", sigma_sweep(signal, detector_config, settings.sigma_sweep))


def _parse_counts(text: str) -> tuple[int, int, int, int]:
    try:
        e, d, p, n = (int(part) for part in text.split(","))
    except ValueError:
        raise _usage_error(f"Invalid counts {text!r} (expected e,d,p,n)") from None
    return e, d, p, n


@passlog_app.command(name="eval")
def eval_command(
    detections: Annotated[
        Path | None,
        cyclopts.Parameter(
            help="Detections file written by `detect`.",
            validator=cyclopts.validators.Path(exists=True, dir_okay=False),
        ),
    ] = None,
    truth: Annotated[
        Path | None,
        cyclopts.Parameter(
            help="Ground truth file (t0_s[,v_mps,d_m,source_level]).",
            validator=cyclopts.validators.Path(exists=True, dir_okay=False),
        ),
    ] = None,
    *,
    tolerance: Annotated[
        float | None, cyclopts.Parameter(help=f"Match window in seconds (default {DEFAULT_TOLERANCE_S:g}).")
    ] = None,
    counts: Annotated[str | None, cyclopts.Parameter(help="Score bare counts e,d,p,n instead of files.")] = None,
    output: Annotated[
        Path | None, cyclopts.Parameter(name=["--output", "-o"], help="Where to write the JSON report.")
    ] = None,
    config: _ConfigFile = None,
    verbose: _Verbose = False,
) -> None:
    """Score detections against ground truth."""
    settings = load_settings(config).merged(tolerance=tolerance, counts=counts, output=output, verbose=verbose or None)
    configure_logging(bool(settings.verbose))
    counts, output = settings.counts, settings.output
    tolerance_s = settings.tolerance if settings.tolerance is not None else DEFAULT_TOLERANCE_S
    if tolerance_s <= 0:
        raise _usage_error(f"Match tolerance must be positive, got {tolerance_s}")

    if counts:
        try:
            eval_report = EvalReport.from_counts(*_parse_counts(counts), tolerance_s)
        except ValidationError as exc:
            report_config_validation_errors("--counts", exc)
            raise SystemExit(EXIT_USAGE)
    elif detections and truth:
        with _data_errors():
            eval_report = report(read_detections(detections), read_ground_truth(truth).times, tolerance_s)
    else:
        raise _usage_error("Give a detections file and a truth file, or --counts e,d,p,n")

    run_config = RunConfig(command="eval", input=detections, truth=truth, output=output, tolerance_s=tolerance_s)
    document = json.dumps(
        {
            "report": eval_report.model_dump(mode="json"),
            "config": run_config.model_dump(mode="json", exclude_none=True),
        },
        indent=2,
        sort_keys=True,
    )

    report_eval(eval_report, output)
    if output:
        with _data_errors():
            output.write_text(document + "\n", encoding="utf-8")
    else:
        print_json(document)
