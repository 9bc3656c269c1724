"""Synthetic roadside recordings with known pass-by instants.

A vehicle at constant speed v passing at distance d from the microphone radiates an intensity proportional
to 1 / (d^2 + v^2 t^2); the pressure amplitude is its square root, normalized to `source_level` at closest
approach. Each vehicle modulates its own seeded white-noise carrier (engine/tyre noise proxy) and a seeded
Gaussian background is added on top.
"""

import math
from typing import overload

import numpy as np

from passlog.config import SynthConfig
from passlog.type_defs import FloatArray, GroundTruth, PassByEvent, PressureSignal

_NOISE_STREAM = 0


@overload
def passby_envelope(event: PassByEvent, t_s: float) -> float: ...
@overload
def passby_envelope(event: PassByEvent, t_s: FloatArray) -> FloatArray: ...
def passby_envelope(event: PassByEvent, t_s: float | FloatArray) -> float | FloatArray:
    """Pressure amplitude source_level · d / sqrt(d^2 + v^2 (t - t0)^2)."""
    distance = np.sqrt(event.d_m**2 + (event.v_mps * (np.asarray(t_s) - event.t0_s)) ** 2)
    amplitude = event.source_level * event.d_m / distance
    return float(amplitude) if np.ndim(amplitude) == 0 else amplitude


def mean_abs_noise(noise_amplitude: float) -> float:
    """Mean rectified value of zero-mean Gaussian noise with RMS `noise_amplitude`."""
    return noise_amplitude * math.sqrt(2 / math.pi)


def _carrier_rng(config: SynthConfig, index: int, event: PassByEvent) -> np.random.Generator:
    if event.carrier_seed is not None:
        return np.random.default_rng(event.carrier_seed)
    return np.random.default_rng([config.rng_seed, index + 1])


def synthesize(config: SynthConfig) -> tuple[PressureSignal, GroundTruth]:
    sample_count = round(config.duration_s * config.sample_rate_hz)
    t = np.arange(sample_count) / config.sample_rate_hz

    samples = np.zeros(sample_count)
    for index, event in enumerate(config.events):
        carrier = _carrier_rng(config, index, event).uniform(-1.0, 1.0, sample_count)
        samples += passby_envelope(event, t) * carrier

    if config.noise_amplitude > 0:
        noise_rng = np.random.default_rng([config.rng_seed, _NOISE_STREAM])
        samples += noise_rng.normal(0.0, config.noise_amplitude, sample_count)

    signal = PressureSignal(samples=samples, sample_rate_hz=config.sample_rate_hz)
    return signal, GroundTruth(events=list(config.events))


def random_schedule(
    count: int,
    duration_s: float,
    min_gap_s: float,
    rng_seed: int,
    margin_s: float = 0.0,
    template: PassByEvent | None = None,
) -> list[PassByEvent]:
    """Seeded pass-by instants, sorted, pairwise at least `min_gap_s` apart and `margin_s` away from both ends.

    Speeds, distances and levels are copied from `template` (default: a `PassByEvent` with default geometry).
    """
    if count < 0:
        raise ValueError(f"Event count must be non-negative, got {count}")
    slack = duration_s - 2 * margin_s - max(count - 1, 0) * min_gap_s
    if slack < 0:
        raise ValueError(
            f"{count} pass-by(s) {min_gap_s} s apart do not fit in {duration_s} s with a {margin_s} s margin"
        )

    template = template or PassByEvent(t0_s=0.0)
    rng = np.random.default_rng([rng_seed, _NOISE_STREAM, count])
    offsets = np.sort(rng.uniform(0.0, slack, count))
    return [
        template.model_copy(update={"t0_s": float(margin_s + offset + rank * min_gap_s)})
        for rank, offset in enumerate(offsets)
    ]
