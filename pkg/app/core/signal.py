"""
Sampled-waveform arithmetic.

Waveforms are immutable value objects; every function here is pure. The
Clarke matrices are the power-variant form:

    [U0, Ua, Ub]^T = 1/3 [[1, 1, 1], [2, -1, -1], [0, sqrt3, -sqrt3]] [Ua, Ub, Uc]^T
"""
from dataclasses import dataclass
from typing import Optional
import io
import math

import numpy as np
import pandas as pd
from scipy import fft as sp_fft

from app.utils.errors import ParameterError, ShapeError

SQRT3 = math.sqrt(3.0)

CLARKE = np.array([[1.0, 1.0, 1.0],
                   [2.0, -1.0, -1.0],
                   [0.0, SQRT3, -SQRT3]]) / 3.0

CLARKE_INVERSE = np.array([[1.0, 1.0, 0.0],
                           [1.0, -0.5, SQRT3 / 2.0],
                           [1.0, -0.5, -SQRT3 / 2.0]])


def next_pow2(n: int) -> int:
    return 1 << max(int(n) - 1, 0).bit_length()


@dataclass(frozen=True)
class Waveform:
    """
    Uniformly sampled real signal.

    Attributes:
        dt (float): Time step in seconds.
        samples (np.ndarray): Sample values (volts or amperes).
        t0 (float): Time of the first sample in seconds.
    """
    dt: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float).reshape(-1)
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if samples.size < 1:
            raise ParameterError("a waveform needs at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("waveform samples must be finite")
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    @property
    def duration(self) -> float:
        return self.dt * self.samples.size

    def scaled(self, factor: float) -> "Waveform":
        return Waveform(self.dt, self.samples * factor, self.t0)

    def delayed(self, n: int) -> "Waveform":
        """Shift right by ``n`` samples, keeping the length."""
        out = np.zeros_like(self.samples)
        if n < len(self):
            out[n:] = self.samples[:len(self) - n]
        return Waveform(self.dt, out, self.t0)

    def head(self, n: int) -> "Waveform":
        return Waveform(self.dt, self.samples[:n], self.t0)


@dataclass(frozen=True)
class Spectrum:
    df: float
    bins: np.ndarray
    damping: float = 0.0

    def __post_init__(self):
        bins = np.array(self.bins, dtype=complex).reshape(-1)
        if not self.df > 0:
            raise ParameterError(f"df must be positive, got {self.df}")
        if bins.size < 1:
            raise ParameterError("a spectrum needs at least one bin")
        object.__setattr__(self, 'bins', bins)

    @property
    def frequencies(self) -> np.ndarray:
        return self.df * np.arange(self.bins.size)

    @property
    def s(self) -> np.ndarray:
        """Complex Laplace variable of every bin."""
        return self.damping + 2j * np.pi * self.frequencies


def _check_triple(first: Waveform, second: Waveform, third: Waveform):
    for other in (second, third):
        if len(other) != len(first) or other.dt != first.dt or other.t0 != first.t0:
            raise ShapeError("the three components must share dt, t0 and length")


@dataclass(frozen=True)
class PhaseTriple:
    a: Waveform
    b: Waveform
    c: Waveform

    def __post_init__(self):
        _check_triple(self.a, self.b, self.c)

    @property
    def dt(self) -> float:
        return self.a.dt

    def __len__(self) -> int:
        return len(self.a)

    def as_array(self) -> np.ndarray:
        return np.vstack([self.a.samples, self.b.samples, self.c.samples])

    @classmethod
    def from_array(cls, dt: float, data: np.ndarray, t0: float = 0.0) -> "PhaseTriple":
        return cls(*(Waveform(dt, row, t0) for row in np.asarray(data, dtype=float)))

    def phase(self, name: str) -> Waveform:
        return getattr(self, name)

    def rotated(self, shift: int) -> "PhaseTriple":
        """Relabel phases so that phase index ``shift`` becomes phase a."""
        return PhaseTriple.from_array(self.dt, np.roll(self.as_array(), -shift, axis=0), self.a.t0)

    def scaled(self, factor: float) -> "PhaseTriple":
        return PhaseTriple(self.a.scaled(factor), self.b.scaled(factor), self.c.scaled(factor))


@dataclass(frozen=True)
class ModalSignal:
    mode0: Waveform
    alpha: Waveform
    beta: Waveform

    def __post_init__(self):
        _check_triple(self.mode0, self.alpha, self.beta)

    def as_array(self) -> np.ndarray:
        return np.vstack([self.mode0.samples, self.alpha.samples, self.beta.samples])

    def mode(self, name: str) -> Waveform:
        return {'0': self.mode0, 'mode0': self.mode0, 'alpha': self.alpha, 'beta': self.beta}[name]


def lightning_impulse(dt: float,
                      duration: float,
                      amplitude: float = 10e3,
                      alpha: float = 20e-6,
                      beta: float = 3e-6) -> Waveform:
    """
    Double-exponential impulse u(t) = A (exp(-t/alpha) - exp(-t/beta)).

    Args:
        dt (float): Time step in seconds.
        duration (float): Signal length in seconds, at least ten times ``alpha``.
        amplitude (float): Scale A in volts.
        alpha (float): Tail time constant in seconds.
        beta (float): Front time constant in seconds, ``0 < beta < alpha``.

    Returns:
        Waveform: The sampled impulse starting at t = 0.

    Raises:
        ParameterError: For non-positive or inverted time constants, or a short duration.
    """
    if not (0 < beta < alpha):
        raise ParameterError(f"time constants must satisfy 0 < beta < alpha, got alpha={alpha}, beta={beta}")
    if duration < 10 * alpha:
        raise ParameterError(f"duration {duration} s is shorter than 10*alpha = {10 * alpha} s")
    t = dt * np.arange(int(round(duration / dt)))
    return Waveform(dt, amplitude * (np.exp(-t / alpha) - np.exp(-t / beta)))


def rectangular_pulse(dt: float, duration: float, amplitude: float = 10e3, width: float = 1e-6) -> Waveform:
    if width < dt:
        raise ParameterError(f"pulse width {width} s is shorter than the time step")
    n = int(round(duration / dt))
    samples = np.zeros(n)
    samples[:int(round(width / dt))] = amplitude
    return Waveform(dt, samples)


def clarke_forward(p: PhaseTriple) -> ModalSignal:
    modes = CLARKE @ p.as_array()
    t0 = p.a.t0
    return ModalSignal(*(Waveform(p.dt, row, t0) for row in modes))


def clarke_inverse(m: ModalSignal) -> PhaseTriple:
    return PhaseTriple.from_array(m.mode0.dt, CLARKE_INVERSE @ m.as_array(), m.mode0.t0)


def convolve(a: Waveform, b: Waveform) -> Waveform:
    """Full linear convolution scaled by dt, through a zero-padded FFT."""
    if a.dt != b.dt:
        raise ParameterError(f"dt mismatch: {a.dt} vs {b.dt}")
    length = len(a) + len(b) - 1
    n_fft = next_pow2(length)
    product = sp_fft.rfft(a.samples, n_fft) * sp_fft.rfft(b.samples, n_fft)
    out = sp_fft.irfft(product, n_fft)[:length] * a.dt
    return Waveform(a.dt, out, a.t0 + b.t0)


def signal_energy(w: Waveform) -> float:
    return float(np.dot(w.samples, w.samples) * w.dt)


def damped_spectrum(w: Waveform, damping: float, n_fft: int) -> Spectrum:
    """Forward numerical Laplace transform on the bins of an ``n_fft`` grid."""
    t = w.dt * np.arange(len(w))
    bins = sp_fft.rfft(w.samples * np.exp(-damping * t), n_fft) * w.dt
    return Spectrum(1.0 / (n_fft * w.dt), bins, damping)


def inverse_damped_spectrum(spectrum: Spectrum, n_samples: int, taper: Optional[np.ndarray] = None) -> Waveform:
    """Inverse of :func:`damped_spectrum`, with optional bin taper."""
    n_fft = 2 * (spectrum.bins.size - 1)
    dt = 1.0 / (n_fft * spectrum.df)
    bins = spectrum.bins if taper is None else spectrum.bins * taper
    raw = sp_fft.irfft(bins, n_fft)[:n_samples] / dt
    t = dt * np.arange(n_samples)
    return Waveform(dt, raw * np.exp(spectrum.damping * t))


def waveform_to_csv(w: Waveform) -> str:
    frame = pd.DataFrame({'time_s': w.times, 'value': w.samples})
    return frame.to_csv(index=False, float_format='%.17g')


def waveform_from_csv(text: str) -> Waveform:
    frame = pd.read_csv(io.StringIO(text))
    if list(frame.columns) != ['time_s', 'value']:
        raise ShapeError(f"expected columns time_s,value, got {list(frame.columns)}")
    times = frame['time_s'].to_numpy(dtype=float)
    dt = float(times[1] - times[0]) if times.size > 1 else 1.0
    return Waveform(dt, frame['value'].to_numpy(dtype=float), float(times[0]))
