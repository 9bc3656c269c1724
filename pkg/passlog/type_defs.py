from typing import Annotated, Any

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field, PlainSerializer, PlainValidator

FloatArray = npt.NDArray[np.float64]
type TimeRange = tuple[float, float]


def _to_samples(value: Any) -> FloatArray:
    array = np.array(value, dtype=np.float64)
    if array.ndim != 1:
        raise ValueError(f"Expected a 1-D sequence of samples, got shape {array.shape}")
    if array.size == 0:
        raise ValueError("Signal has no samples")
    if not np.all(np.isfinite(array)):
        raise ValueError("Signal contains NaN or infinite samples")
    array.setflags(write=False)
    return array


def _to_list(array: FloatArray) -> list[float]:
    return array.tolist()


Samples = Annotated[FloatArray, PlainValidator(_to_samples), PlainSerializer(_to_list)]


class PressureSignal(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """Uniformly sampled sound pressure, normalized so that full scale is 1.0."""

    samples: Samples
    sample_rate_hz: float = Field(gt=0)

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    def times(self) -> FloatArray:
        return np.arange(self.samples.size) / self.sample_rate_hz


class DerivedSignal(BaseModel, frozen=True, arbitrary_types_allowed=True):
    """A sequence computed from a recording (smoothed envelope, derivatives).

    `time_offset_s` maps index 0 onto the recording's own time axis.
    """

    values: Samples
    sample_rate_hz: float = Field(gt=0)
    time_offset_s: float = 0.0

    def times(self) -> FloatArray:
        return self.time_offset_s + np.arange(self.values.size) / self.sample_rate_hz


class GaussianKernel(BaseModel, frozen=True, arbitrary_types_allowed=True):
    taps: Samples
    sample_rate_hz: float = Field(gt=0)
    t_c_s: float = Field(gt=0)
    sigma_s: float = Field(gt=0)

    @property
    def center_index(self) -> float:
        return (self.taps.size - 1) / 2

    @property
    def delay_s(self) -> float:
        """Group delay of the kernel: where its peak sits, in seconds."""
        return self.center_index / self.sample_rate_hz

    @property
    def gain(self) -> float:
        return float(self.taps.sum())


class NoiseProfile(BaseModel, frozen=True):
    n_bar: float = Field(ge=0)
    total_noise_duration_s: float = Field(gt=0)


class DetectionEvent(BaseModel, frozen=True):
    time_s: float
    w_level: float
    w2_value: float = Field(lt=0)


class PassByEvent(BaseModel, frozen=True):
    t0_s: float
    v_mps: float = Field(default=14.0, gt=0)
    d_m: float = Field(default=5.0, gt=0)
    source_level: float = Field(default=0.5, gt=0)
    carrier_seed: int | None = None


class GroundTruth(BaseModel, frozen=True):
    events: list[PassByEvent]

    @property
    def times(self) -> list[float]:
        return [event.t0_s for event in self.events]
