"""Pass-by detection: rectify, smooth with a Gaussian, and keep the negative minima of the second derivative
that stand above q times the background noise level.

Negative minima of w'' mark the maxima of the smoothed envelope w, and also the inflection-like points where
the slope of w changes when two vehicles pass close together.
"""

import logging
from collections.abc import Sequence
from typing import NamedTuple

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel

from passlog.config import DetectorConfig
from passlog.dsp import convolve_direct, convolve_fast, decimate, derivative, make_gaussian, rectify
from passlog.type_defs import (
    DerivedSignal,
    DetectionEvent,
    GaussianKernel,
    NoiseProfile,
    PressureSignal,
    TimeRange,
)

type IndexArray = npt.NDArray[np.intp]

# Largest end tap, relative to the peak, that leaves no visible step in w''
_KERNEL_EDGE_LIMIT = 1e-3


class DetectionTraces(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """Every intermediate stage of one detection run."""

    original: PressureSignal
    rectified: PressureSignal
    decimated: PressureSignal
    kernel: GaussianKernel
    smoothed: DerivedSignal
    first_derivative: DerivedSignal
    second_derivative: DerivedSignal
    candidates: list[int]  # negative minima of w'' inside the recording
    selected: list[int]  # candidates above the threshold, before the refractory merge
    threshold: float  # q · n̄ scaled into w's units


class DetectionResult(NamedTuple):
    events: list[DetectionEvent]
    noise: NoiseProfile
    traces: DetectionTraces


def noise_profile(rectified: PressureSignal, ranges: Sequence[TimeRange]) -> NoiseProfile:
    """Average noise amplitude n̄ over the union of vehicle-free sections (seconds, recording time axis)."""
    duration = rectified.duration_s
    times = rectified.times()
    mask = np.zeros(rectified.samples.size, dtype=bool)
    for start, end in ranges:
        if start < 0 or end > duration + 1e-9 or end <= start:
            raise ValueError(f"Noise range {start}:{end} s lies outside the recording (0:{duration:g} s)")
        mask |= (times >= start) & (times < end)

    if not mask.any():
        raise ValueError(f"Noise ranges {list(ranges)} select no samples")

    return NoiseProfile(
        n_bar=float(rectified.samples[mask].mean()),
        total_noise_duration_s=int(mask.sum()) / rectified.sample_rate_hz,
    )


def auto_noise_profile(rectified: PressureSignal, block_s: float = 1.0, percentile: float = 10.0) -> NoiseProfile:
    """Fallback noise estimate: the given percentile of the block means of the rectified envelope."""
    block = max(1, round(block_s * rectified.sample_rate_hz))
    block_count = rectified.samples.size // block
    if block_count == 0:
        raise ValueError(f"Recording shorter than one {block_s} s noise block")

    means = rectified.samples[: block_count * block].reshape(block_count, block).mean(axis=1)
    n_bar = float(np.percentile(means, percentile))
    quiet_blocks = int(np.count_nonzero(means <= n_bar))
    logging.warning(
        f"Estimating background noise automatically ({percentile:g}th percentile of {block_s:g} s blocks): "
        f"n̄ = {n_bar:.6g}"
    )
    return NoiseProfile(n_bar=n_bar, total_noise_duration_s=quiet_blocks * block / rectified.sample_rate_hz)


def find_negative_minima(w2: DerivedSignal) -> list[int]:
    """Indices j where w2[j] < 0 and both neighbours are strictly larger.

    A flat run of equal values counts once, at its first index, when the samples on both sides of the run are
    strictly larger.
    """
    values = w2.values
    if values.size < 3:
        return []

    run_starts = np.concatenate(([0], np.flatnonzero(np.diff(values) != 0) + 1))
    run_values = values[run_starts]
    inner = np.arange(1, run_starts.size - 1)
    is_minimum = (
        (run_values[inner] < 0)
        & (run_values[inner - 1] > run_values[inner])
        & (run_values[inner + 1] > run_values[inner])
    )
    return run_starts[inner[is_minimum]].tolist()


def refractory_merge(events: Sequence[DetectionEvent], refractory_s: float) -> list[DetectionEvent]:
    """Drop every event that follows the last kept event by less than `refractory_s`."""
    kept = list[DetectionEvent]()
    for event in sorted(events, key=lambda e: e.time_s):
        if kept and event.time_s - kept[-1].time_s < refractory_s:
            continue
        kept.append(event)
    return kept


class _Stages(NamedTuple):
    rectified: PressureSignal
    decimated: PressureSignal
    noise: NoiseProfile
    kernel: GaussianKernel
    smoothed: DerivedSignal
    first_derivative: DerivedSignal
    second_derivative: DerivedSignal
    candidates: IndexArray


def _run_stages(signal: PressureSignal, config: DetectorConfig) -> _Stages:
    if signal.duration_s <= 2 * config.t_c_s:
        raise ValueError(
            f"Recording ({signal.duration_s:g} s) must be longer than the Gaussian kernel support (2·t_c = "
            f"{2 * config.t_c_s:g} s)"
        )

    rectified = rectify(signal)
    decimated = decimate(rectified, config.decimation)
    if config.noise_ranges:
        noise = noise_profile(decimated, config.noise_ranges)
    else:
        noise = auto_noise_profile(decimated, block_s=config.auto_noise_block_s)

    kernel = make_gaussian(config.t_c_s, config.sigma_s, decimated.sample_rate_hz)
    if kernel.taps[0] > _KERNEL_EDGE_LIMIT:
        logging.warning(
            f"Gaussian kernel cut off at {kernel.taps[0]:.3g} of its peak (σ = {config.sigma_s:g} s, t_c = "
            f"{config.t_c_s:g} s): expect spurious minima at the kernel edges; lower σ (σ ≤ t_c/5) or set a "
            "refractory time"
        )
    convolve = convolve_fast if config.backend == "fast" else convolve_direct
    smoothed = convolve(decimated, kernel)
    first = derivative(smoothed)
    second = derivative(first)

    minima = np.asarray(find_negative_minima(second), dtype=np.intp)
    times = smoothed.time_offset_s + minima / smoothed.sample_rate_hz
    # Minima in the convolution tails map outside the recording
    candidates = minima[(times >= 0) & (times <= signal.duration_s)]

    logging.info(
        f"{signal.samples.size} samples at {signal.sample_rate_hz:g} Hz -> {decimated.samples.size} at "
        f"{decimated.sample_rate_hz:g} Hz; kernel {kernel.taps.size} taps; {minima.size} negative minima, "
        f"{candidates.size} inside the recording"
    )
    return _Stages(rectified, decimated, noise, kernel, smoothed, first, second, candidates)


def _threshold(stages: _Stages, q: float) -> float:
    return q * stages.noise.n_bar * stages.kernel.gain


def _select(stages: _Stages, q: float) -> IndexArray:
    return stages.candidates[stages.smoothed.values[stages.candidates] >= _threshold(stages, q)]


def _events(stages: _Stages, selected: IndexArray, refractory_s: float) -> list[DetectionEvent]:
    smoothed = stages.smoothed
    events = [
        DetectionEvent(
            time_s=smoothed.time_offset_s + int(j) / smoothed.sample_rate_hz,
            w_level=float(smoothed.values[j]),
            w2_value=float(stages.second_derivative.values[j]),
        )
        for j in selected
    ]
    return refractory_merge(events, refractory_s)


def detect(signal: PressureSignal, config: DetectorConfig) -> DetectionResult:
    """Detect pass-bys in a recording; events come back in time order."""
    stages = _run_stages(signal, config)
    selected = _select(stages, config.q)
    events = _events(stages, selected, config.refractory_s)

    traces = DetectionTraces(
        original=signal,
        rectified=stages.rectified,
        decimated=stages.decimated,
        kernel=stages.kernel,
        smoothed=stages.smoothed,
        first_derivative=stages.first_derivative,
        second_derivative=stages.second_derivative,
        candidates=stages.candidates.tolist(),
        selected=selected.tolist(),
        threshold=_threshold(stages, config.q),
    )
    logging.info(f"{selected.size} candidate(s) above threshold {traces.threshold:.6g}, {len(events)} event(s) kept")
    return DetectionResult(events=events, noise=stages.noise, traces=traces)


def threshold_sweep(
    signal: PressureSignal, config: DetectorConfig, q_values: Sequence[float]
) -> list[tuple[float, int]]:
    """Event count for each threshold multiplier; the pipeline runs once and only the selection is repeated."""
    if any(q < 0 for q in q_values):
        raise ValueError(f"Threshold multipliers must be non-negative, got {list(q_values)}")
    if list(q_values) != sorted(q_values):
        raise ValueError(f"Threshold multipliers must be sorted in ascending order, got {list(q_values)}")

    stages = _run_stages(signal, config)
    return [(q, len(_events(stages, _select(stages, q), config.refractory_s))) for q in q_values]


def sigma_sweep(
    signal: PressureSignal, config: DetectorConfig, sigma_values: Sequence[float]
) -> list[tuple[float, int]]:
    """Event count for each Gaussian width: narrow kernels over-detect, wide ones merge close vehicles."""
    return [
        (sigma, len(detect(signal, config.model_copy(update={"sigma_s": sigma})).events)) for sigma in sigma_values
    ]
