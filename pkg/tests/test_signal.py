import math

import numpy as np
import pytest

from app.core.signal import (CLARKE,
                             CLARKE_INVERSE,
                             PhaseTriple,
                             Waveform,
                             clarke_forward,
                             clarke_inverse,
                             convolve,
                             damped_spectrum,
                             inverse_damped_spectrum,
                             lightning_impulse,
                             next_pow2,
                             rectangular_pulse,
                             signal_energy,
                             waveform_from_csv,
                             waveform_to_csv
                             )
from app.utils.errors import ParameterError, ShapeError


def test_clarke_matrices_are_inverse():
    assert np.allclose(CLARKE @ CLARKE_INVERSE, np.eye(3))


def test_clarke_names_follow_the_transform_direction():
    # phases -> modes
    assert np.allclose(CLARKE @ [1.0, 0.0, 0.0], [1 / 3, 2 / 3, 0.0])
    # modes -> phases
    assert np.allclose(CLARKE_INVERSE @ [0.0, 0.0, 1.0], [0.0, math.sqrt(3) / 2, -math.sqrt(3) / 2])


def test_balanced_set_has_no_ground_mode():
    t = 1e-6 * np.arange(2000)
    phases = np.array([np.sin(2 * np.pi * 50 * t + shift) for shift in (0.0, -2 * np.pi / 3, 2 * np.pi / 3)])
    modal = clarke_forward(PhaseTriple.from_array(1e-6, phases))
    assert np.max(np.abs(modal.mode0.samples)) < 1e-12


def test_phase_a_only_signal_splits_into_ground_and_alpha():
    data = np.zeros((3, 4))
    data[0] = [3.0, 6.0, -3.0, 0.0]
    modal = clarke_forward(PhaseTriple.from_array(1e-6, data))
    assert np.allclose(modal.mode0.samples, data[0] / 3)
    assert np.allclose(modal.alpha.samples, 2 * data[0] / 3)
    assert np.allclose(modal.beta.samples, 0.0)
    assert np.allclose(clarke_inverse(modal).as_array(), data)


def test_triple_rejects_mismatched_lengths():
    with pytest.raises(ShapeError):
        PhaseTriple(Waveform(1e-6, np.zeros(4)), Waveform(1e-6, np.zeros(4)), Waveform(1e-6, np.zeros(5)))


def test_rotation_moves_phase_to_a():
    data = np.arange(12, dtype=float).reshape(3, 4)
    rotated = PhaseTriple.from_array(1e-6, data).rotated(1)
    assert np.array_equal(rotated.a.samples, data[1])
    assert np.array_equal(rotated.c.samples, data[0])


def test_waveform_rejects_non_finite_samples():
    with pytest.raises(ParameterError):
        Waveform(1e-6, np.array([0.0, np.nan]))


def test_lightning_impulse_peak():
    w = lightning_impulse(1e-7, 5e-3)
    alpha, beta = 20e-6, 3e-6
    t_peak = alpha * beta / (alpha - beta) * math.log(alpha / beta)
    peak = 10e3 * (math.exp(-t_peak / alpha) - math.exp(-t_peak / beta))
    assert len(w) == 50000
    assert w.samples[0] == 0.0
    assert np.max(w.samples) == pytest.approx(peak, rel=1e-3)


def test_lightning_impulse_rejects_inverted_constants():
    with pytest.raises(ParameterError):
        lightning_impulse(1e-7, 5e-3, alpha=3e-6, beta=20e-6)


def test_lightning_impulse_rejects_short_window():
    with pytest.raises(ParameterError):
        lightning_impulse(1e-7, 1e-4)


def test_rectangular_pulse_width():
    w = rectangular_pulse(1e-7, 1e-4, amplitude=2.0, width=1e-6)
    assert np.count_nonzero(w.samples) == 10
    assert signal_energy(w) == pytest.approx(4.0 * 1e-6)


def test_convolution_with_unit_impulse_is_identity():
    dt = 1e-6
    delta = Waveform(dt, np.array([1.0 / dt]))
    signal = Waveform(dt, np.array([1.0, -2.0, 0.5, 4.0]))
    out = convolve(delta, signal)
    assert np.allclose(out.samples, signal.samples)


def test_convolution_length_and_scale():
    dt = 0.5
    out = convolve(Waveform(dt, np.ones(3)), Waveform(dt, np.ones(2)))
    assert len(out) == 4
    assert np.allclose(out.samples, [0.5, 1.0, 1.0, 0.5])


def test_convolution_commutes():
    rng = np.random.default_rng(3)
    a = Waveform(1e-7, rng.normal(size=257))
    b = Waveform(1e-7, rng.normal(size=100))
    assert np.allclose(convolve(a, b).samples, convolve(b, a).samples, rtol=1e-9, atol=1e-9 * 1e-7)


def test_convolution_energy_satisfies_parseval():
    rng = np.random.default_rng(11)
    dt = 1e-7
    a = Waveform(dt, rng.normal(size=300))
    b = Waveform(dt, rng.normal(size=200))
    n_fft = 512
    spectrum = np.fft.fft(a.samples, n_fft) * np.fft.fft(b.samples, n_fft) * dt
    frequency_energy = float(np.sum(np.abs(spectrum) ** 2)) * dt / n_fft
    assert signal_energy(convolve(a, b)) == pytest.approx(frequency_energy, rel=1e-9)


def test_convolution_rejects_dt_mismatch():
    with pytest.raises(ParameterError):
        convolve(Waveform(1e-6, np.ones(3)), Waveform(2e-6, np.ones(3)))


def test_damped_transform_round_trip():
    rng = np.random.default_rng(7)
    w = Waveform(1e-7, rng.normal(size=300))
    spectrum = damped_spectrum(w, 2e4, 1024)
    back = inverse_damped_spectrum(spectrum, len(w))
    assert np.allclose(back.samples, w.samples, atol=1e-9)
    assert back.dt == pytest.approx(w.dt)


def test_next_pow2():
    assert [next_pow2(n) for n in (1, 2, 3, 1000, 1024)] == [1, 2, 4, 1024, 1024]


def test_waveform_csv_interface():
    w = Waveform(1e-6, np.array([0.0, 1.5, -2.25]), t0=1e-3)
    parsed = waveform_from_csv(waveform_to_csv(w))
    assert parsed.dt == pytest.approx(w.dt)
    assert parsed.t0 == pytest.approx(1e-3)
    assert np.allclose(parsed.samples, w.samples)


def test_waveform_csv_rejects_other_columns():
    with pytest.raises(ShapeError):
        waveform_from_csv("t,v\n0,1\n1,2\n")
