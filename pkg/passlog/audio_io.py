"""Read and write WAV recordings as normalized `PressureSignal`s."""

import logging
from pathlib import Path
from typing import Literal

import numpy as np
import numpy.typing as npt
import soundfile as sf

from passlog.type_defs import FloatArray, PressureSignal

BitDepth = Literal["16", "24", "float32"]

# libsndfile left-justifies integer PCM into int32, so every depth scales by 2^31
_INT32_FULL_SCALE = 2.0**31

_SUBTYPES: dict[BitDepth, str] = {"16": "PCM_16", "24": "PCM_24", "float32": "FLOAT"}
# WAVEX: the WAVE_FORMAT_EXTENSIBLE header most 24-bit recorders write
_RIFF_FORMATS = {"WAV", "WAVEX"}
_READABLE_SUBTYPES = {"PCM_16", "PCM_24", "FLOAT"}


class UnsupportedAudioError(ValueError):
    pass


def read_wav(path: Path) -> PressureSignal:
    """Read a PCM 16/24-bit or float32 WAV file, downmixing channels by their mean.

    Integer samples are scaled by 2^(bits-1), so full scale maps to [-1, 1).
    """
    info = sf.info(str(path))
    if info.format not in _RIFF_FORMATS:
        raise UnsupportedAudioError(f"{path}: unsupported container {info.format!r} (expected WAV)")
    if info.subtype not in _READABLE_SUBTYPES:
        raise UnsupportedAudioError(
            f"{path}: unsupported codec {info.subtype!r} ({info.subtype_info}); expected PCM_16, PCM_24 or FLOAT"
        )

    if info.subtype == "FLOAT":
        frames, rate = sf.read(str(path), dtype="float64", always_2d=True)
    else:
        raw, rate = sf.read(str(path), dtype="int32", always_2d=True)
        frames = raw / _INT32_FULL_SCALE

    return PressureSignal(samples=frames.mean(axis=1), sample_rate_hz=float(rate))


def _clip(samples: FloatArray) -> tuple[FloatArray, int]:
    clipped_count = int(np.count_nonzero(np.abs(samples) > 1.0))
    if clipped_count:
        logging.warning(f"{clipped_count} sample(s) outside [-1, 1] clipped before writing")
    return np.clip(samples, -1.0, 1.0), clipped_count


def _quantize(samples: FloatArray, bits: int) -> npt.NDArray[np.int32]:
    full_scale = 2 ** (bits - 1)
    levels = np.clip(np.round(samples * full_scale), -full_scale, full_scale - 1).astype(np.int32)
    return levels << (32 - bits)


def write_wav(signal: PressureSignal, path: Path, bit_depth: BitDepth = "24") -> int:
    """Write `signal` as a mono WAV file; return how many samples had to be clipped."""
    samples, clipped_count = _clip(signal.samples)
    rate = round(signal.sample_rate_hz)
    if rate != signal.sample_rate_hz:
        raise ValueError(f"WAV files need an integer sample rate, got {signal.sample_rate_hz} Hz")

    match bit_depth:
        case "float32":
            data = samples.astype(np.float32)
        case "16":
            data = _quantize(samples, 16)
        case "24":
            data = _quantize(samples, 24)

    sf.write(str(path), data, rate, subtype=_SUBTYPES[bit_depth], format="WAV")
    return clipped_count
