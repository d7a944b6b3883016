"""Transmitted pulse synthesis: LFM chirps and unmodulated tone pulses."""

from dataclasses import dataclass
from typing import Literal

import numpy as np

__all__ = ["Waveform", "make_lfm_chirp", "make_tone_pulse", "pulse_energy"]


@dataclass(frozen=True)
class Waveform:
    """A sampled complex pulse.

    Attributes
    ----------
    samples : ndarray of complex128, shape (n,)
    bandwidth_hz : float
        Swept bandwidth for ``kind="lfm"``, tone frequency for ``kind="tone"``.
    duration_s, sample_rate_hz : float
    kind : {"lfm", "tone"}
    """

    samples: np.ndarray
    bandwidth_hz: float
    duration_s: float
    sample_rate_hz: float
    kind: Literal["lfm", "tone"] = "lfm"

    @property
    def n(self) -> int:
        return len(self.samples)

    def scaled(self, factor: complex) -> "Waveform":
        return Waveform(self.samples * factor, self.bandwidth_hz, self.duration_s,
                        self.sample_rate_hz, self.kind)


def _num_samples(duration_s: float, sample_rate_hz: float) -> int:
    n = int(round(duration_s * sample_rate_hz))
    if n < 1:
        raise ValueError(f"pulse of {duration_s} s at {sample_rate_hz} Hz has no samples")
    return n


def make_lfm_chirp(bandwidth_hz: float, duration_s: float, sample_rate_hz: float) -> Waveform:
    """Up-chirp ``exp(j*pi*(B/T)*t**2)`` sampled at ``t_k = k / fs``, k = 0..n-1.

    Raises
    ------
    ValueError
        If any parameter is non-positive or ``sample_rate_hz < 2 * bandwidth_hz``.
    """
    if bandwidth_hz <= 0 or duration_s <= 0 or sample_rate_hz <= 0:
        raise ValueError("bandwidth, duration and sample rate must be positive")
    if sample_rate_hz < 2 * bandwidth_hz:
        raise ValueError(
            f"sample rate {sample_rate_hz} Hz is below twice the bandwidth {bandwidth_hz} Hz")
    n = _num_samples(duration_s, sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    samples = np.exp(1j * np.pi * (bandwidth_hz / duration_s) * t**2)
    return Waveform(samples, float(bandwidth_hz), float(duration_s), float(sample_rate_hz), "lfm")


def make_tone_pulse(freq_hz: float, duration_s: float, sample_rate_hz: float) -> Waveform:
    """Unmodulated complex sinusoid ``exp(j*2*pi*f*t_k)``, used for contrastive echoes."""
    if duration_s <= 0 or sample_rate_hz <= 0:
        raise ValueError("duration and sample rate must be positive")
    if not 0 < freq_hz < sample_rate_hz / 2:
        raise ValueError(f"tone frequency must lie in (0, {sample_rate_hz / 2}) Hz, got {freq_hz}")
    n = _num_samples(duration_s, sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    samples = np.exp(2j * np.pi * freq_hz * t)
    return Waveform(samples, float(freq_hz), float(duration_s), float(sample_rate_hz), "tone")


def pulse_energy(w: Waveform | np.ndarray) -> float:
    """Sum of squared magnitudes of the pulse samples."""
    s = w.samples if isinstance(w, Waveform) else np.asarray(w)
    return float(np.sum(s.real**2 + s.imag**2))
