import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmrp.signal import make_lfm_chirp, make_tone_pulse, pulse_energy


@pytest.fixture(scope="module")
def chirp():
    return make_lfm_chirp(1e6, 1e-4, 2e6)


def test_chirp_length_and_first_samples(chirp):
    assert chirp.n == 200
    assert chirp.samples[0] == 1 + 0j
    # pi * (B/T) * t^2 at t = 5e-7 s
    expected = cmath.exp(1j * math.pi * 1e10 * (5e-7) ** 2)
    assert abs(chirp.samples[1] - expected) < 1e-15
    assert cmath.phase(chirp.samples[1]) == pytest.approx(0.0025 * math.pi, rel=1e-12)


def test_chirp_matches_scalar_formula(chirp):
    for k in (0, 7, 99, 199):
        t = k / 2e6
        assert abs(chirp.samples[k] - cmath.exp(1j * math.pi * (1e6 / 1e-4) * t * t)) < 1e-12


def test_chirp_instantaneous_frequency_sweeps_band(chirp):
    dphi = np.angle(chirp.samples[1:] * np.conj(chirp.samples[:-1]))
    freq = dphi / (2 * np.pi) * 2e6
    assert np.all(np.diff(freq) > 0)
    bin_width = 2e6 / chirp.n
    assert abs(freq[0]) < bin_width
    assert abs(freq[-1] - 1e6) < bin_width


@pytest.mark.parametrize("args", [(0, 1e-4, 2e6), (1e6, 0, 2e6), (1e6, 1e-4, 0), (1e6, 1e-4, 1.5e6),
                                  (-1e6, 1e-4, 2e6)])
def test_chirp_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        make_lfm_chirp(*args)


def test_tone_pulse():
    w = make_tone_pulse(5e5, 1e-4, 2e6)
    assert w.kind == "tone" and w.n == 200
    assert abs(w.samples[1] - 1j) < 1e-15
    np.testing.assert_allclose(np.abs(w.samples), 1.0, atol=1e-12)


@pytest.mark.parametrize("freq", [0.0, -1.0, 1e6, 2e6])
def test_tone_rejects_out_of_band(freq):
    with pytest.raises(ValueError):
        make_tone_pulse(freq, 1e-4, 2e6)


def test_pulse_energy(chirp):
    assert pulse_energy(chirp) == pytest.approx(200.0, rel=1e-14)
    assert pulse_energy(chirp.scaled(0.5)) == pytest.approx(50.0, rel=1e-14)
    assert pulse_energy(np.array([1 + 0j])) == 1.0


@settings(max_examples=50, deadline=None)
@given(bw=st.floats(1e5, 1e6), dur=st.floats(1e-5, 5e-4), over=st.floats(2.0, 8.0))
def test_unit_magnitude_property(bw, dur, over):
    fs = bw * over
    w = make_lfm_chirp(bw, dur, fs)
    assert w.n == round(dur * fs)
    assert np.max(np.abs(np.abs(w.samples) - 1)) < 1e-12
    tone = make_tone_pulse(bw / 2, dur, fs)
    assert np.max(np.abs(np.abs(tone.samples) - 1)) < 1e-12
