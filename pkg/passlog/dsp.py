"""Numerical core: rectification, Gaussian kernel, convolution, decimation, forward differences."""

import numpy as np
from scipy import fft

from passlog.type_defs import DerivedSignal, FloatArray, GaussianKernel, PressureSignal

# Input samples per overlap-add block of `convolve_fast`. Fixed so that output is bit-identical across runs.
FFT_BLOCK_SIZE = 1 << 14


def _values(signal: PressureSignal | DerivedSignal) -> FloatArray:
    return signal.samples if isinstance(signal, PressureSignal) else signal.values


def _time_offset(signal: PressureSignal | DerivedSignal) -> float:
    return 0.0 if isinstance(signal, PressureSignal) else signal.time_offset_s


def rectify(signal: PressureSignal) -> PressureSignal:
    return PressureSignal(samples=np.abs(signal.samples), sample_rate_hz=signal.sample_rate_hz)


def make_gaussian(t_c_s: float, sigma_s: float, sample_rate_hz: float) -> GaussianKernel:
    """Sampled Gaussian exp(-(t_i - t_c)^2 / 2σ^2) over [0, 2·t_c], with unit peak (no area normalization)."""
    for name, value in (("t_c_s", t_c_s), ("sigma_s", sigma_s), ("sample_rate_hz", sample_rate_hz)):
        if value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")

    tap_count = round(2 * t_c_s * sample_rate_hz) + 1
    # Offsets from the centre index keep the taps exactly symmetric
    offsets_s = (np.arange(tap_count) - (tap_count - 1) / 2) / sample_rate_hz
    taps = np.exp(-(offsets_s**2) / (2 * sigma_s**2))
    if tap_count % 2 == 0:
        taps /= taps.max()  # no tap falls on t_c: peak-normalize instead

    return GaussianKernel(taps=taps, sample_rate_hz=sample_rate_hz, t_c_s=t_c_s, sigma_s=sigma_s)


def _check_rates(signal: PressureSignal | DerivedSignal, kernel: GaussianKernel) -> None:
    if not np.isclose(signal.sample_rate_hz, kernel.sample_rate_hz, rtol=1e-12, atol=0.0):
        raise ValueError(
            f"Kernel sampled at {kernel.sample_rate_hz} Hz cannot filter a signal sampled at {signal.sample_rate_hz} Hz"
        )


def convolve_direct(signal: PressureSignal | DerivedSignal, kernel: GaussianKernel) -> DerivedSignal:
    """Full linear convolution, one output sample at a time.

    Reference implementation: w(k) = Σ_{j=M1..M2} a(j)·g(k - j + 1) with M1 = max(1, k + 1 - n) and
    M2 = min(k, m), for k = 1..m + n - 1 (written here with 0-based indices).
    """
    _check_rates(signal, kernel)
    a = _values(signal)
    g = kernel.taps
    m, n = a.size, g.size

    w = np.empty(m + n - 1)
    for k in range(m + n - 1):
        first = max(0, k + 1 - n)
        last = min(k, m - 1)
        w[k] = np.dot(a[first : last + 1], g[k - last : k - first + 1][::-1])

    return DerivedSignal(
        values=w,
        sample_rate_hz=signal.sample_rate_hz,
        time_offset_s=_time_offset(signal) - kernel.delay_s,
    )


def convolve_fast(
    signal: PressureSignal | DerivedSignal, kernel: GaussianKernel, block_size: int = FFT_BLOCK_SIZE
) -> DerivedSignal:
    """Same contract as `convolve_direct`, computed by FFT overlap-add over fixed-size input blocks."""
    _check_rates(signal, kernel)
    a = _values(signal)
    g = kernel.taps
    m, n = a.size, g.size

    fft_size = fft.next_fast_len(block_size + n - 1, real=True)
    step = fft_size - n + 1
    g_spectrum = fft.rfft(g, fft_size)

    w = np.zeros(m + n - 1)
    for start in range(0, m, step):
        block = a[start : start + step]
        filtered = fft.irfft(fft.rfft(block, fft_size) * g_spectrum, fft_size)[: block.size + n - 1]
        w[start : start + filtered.size] += filtered

    return DerivedSignal(
        values=w,
        sample_rate_hz=signal.sample_rate_hz,
        time_offset_s=_time_offset(signal) - kernel.delay_s,
    )


def decimate(signal: PressureSignal, factor: int) -> PressureSignal:
    """Block-mean downsampling; a trailing partial block is averaged over its actual length."""
    if factor < 1:
        raise ValueError(f"Decimation factor must be at least 1, got {factor}")
    if factor == 1:
        return signal

    starts = np.arange(0, signal.samples.size, factor)
    sums = np.add.reduceat(signal.samples, starts)
    counts = np.diff(np.append(starts, signal.samples.size))
    return PressureSignal(samples=sums / counts, sample_rate_hz=signal.sample_rate_hz / factor)


def derivative(signal: DerivedSignal) -> DerivedSignal:
    """Forward difference (w(j+1) - w(j)) / h_t with h_t = 1 / rate. The output is one sample shorter."""
    if signal.values.size < 2:
        raise ValueError(f"Forward difference needs at least 2 samples, got {signal.values.size}")

    h_t = 1.0 / signal.sample_rate_hz
    return DerivedSignal(
        values=np.diff(signal.values) / h_t,
        sample_rate_hz=signal.sample_rate_hz,
        time_offset_s=signal.time_offset_s,
    )
