import numpy as np
import pytest

from passlog.config import DetectorConfig, SynthConfig
from passlog.synth import synthesize
from passlog.type_defs import GroundTruth, PassByEvent, PressureSignal

# Seven pass-bys in 89.5 s, at least 10 s apart, the first and last well clear of the ends
PASSBY_TIMES = (14.0, 24.0, 34.5, 45.0, 56.0, 67.0, 78.5)
NOISE_AMPLITUDE = 0.05  # peak pressure 0.5: peak / noise = 10
QUIET_RANGES = [(0.0, 8.0)]


@pytest.fixture(scope="session")
def seven_passbys() -> tuple[PressureSignal, GroundTruth]:
    config = SynthConfig(
        duration_s=89.5,
        events=[PassByEvent(t0_s=t0) for t0 in PASSBY_TIMES],
        noise_amplitude=NOISE_AMPLITUDE,
        rng_seed=7,
    )
    return synthesize(config)


@pytest.fixture
def detector_config() -> DetectorConfig:
    return DetectorConfig(t_c_s=3.0, sigma_s=0.6, q=1.5, noise_ranges=QUIET_RANGES, refractory_s=0.0)


@pytest.fixture(scope="session")
def close_pair() -> tuple[PressureSignal, GroundTruth]:
    """Two short, close pass-bys (3 m from the microphone at 20 m/s) 1.5 s apart."""
    config = SynthConfig(
        duration_s=40.0,
        events=[PassByEvent(t0_s=t0, v_mps=20.0, d_m=3.0) for t0 in (19.25, 20.75)],
        noise_amplitude=NOISE_AMPLITUDE,
        rng_seed=3,
    )
    return synthesize(config)


@pytest.fixture(scope="session")
def pure_noise() -> PressureSignal:
    signal, _ = synthesize(SynthConfig(duration_s=60.0, noise_amplitude=NOISE_AMPLITUDE, rng_seed=11))
    return signal


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)
