"""
Two-terminal traveling-wave baseline: differentiator-smoother arrival detection
with the classical and the setting-free time-difference metrics.
"""
from dataclasses import dataclass
from typing import Optional, Tuple
import logging
import math

import numpy as np

from app.config import POWER_FREQUENCY, TDOA_THRESHOLD, TDOA_WINDOW
from app.core.fdsolver import prefault_phasor
from app.core.signal import PhaseTriple, Waveform, clarke_forward, signal_energy
from app.database.schemas import ModelKind, NetworkSpec
from app.utils.errors import DegenerateGeometryError, DetectionFailureError, ParameterError

logger = logging.getLogger(__name__)

REFRACTORY_WINDOWS = 3


@dataclass(frozen=True)
class ArrivalTimes:
    """
    Arrival instants in seconds.

    Attributes:
        t0 (float): First arrival at the near terminal.
        t0r (Optional[float]): First reflected arrival at the near terminal.
        tL (float): First arrival at the far terminal.
        tLr (Optional[float]): First reflected arrival at the far terminal.
    """
    t0: float
    t0r: Optional[float]
    tL: float
    tLr: Optional[float]

    def swapped(self) -> "ArrivalTimes":
        return ArrivalTimes(self.tL, self.tLr, self.t0, self.t0r)


@dataclass(frozen=True)
class TdoaEstimate:
    position: float
    out_of_range: bool = False


def diff_smoother(w: Waveform, window: int = TDOA_WINDOW) -> Waveform:
    """
    Rectangular differentiator-smoother: mean of the next ``window`` samples minus
    mean of the previous ``window`` samples, so a unit step becomes a triangle
    peaking at 1 on the step sample.
    """
    if window < 1:
        raise ParameterError(f"smoother window must be at least 1 sample, got {window}")
    if 2 * window > len(w):
        raise ParameterError(f"smoother window {window} is too long for {len(w)} samples")
    kernel = np.concatenate([np.full(window, -1.0 / window), np.full(window, 1.0 / window)])
    padded = np.pad(w.samples, window, mode='edge')
    filtered = np.correlate(padded, kernel, mode='valid')[:len(w)]
    return Waveform(w.dt, filtered, w.t0)


def _crossing(magnitude: np.ndarray, threshold: float, start: int, rising: bool) -> Optional[int]:
    above = magnitude[start:] > threshold
    if rising and start > 0:
        above &= magnitude[start - 1:-1] <= threshold
    hits = np.flatnonzero(above)
    return None if hits.size == 0 else int(start + hits[0])


def _peak(magnitude: np.ndarray, index: int, window: int) -> int:
    return int(index + np.argmax(magnitude[index:index + 2 * window]))


def terminal_arrivals(filtered: Waveform, rms_reference: float,
                      window: int = TDOA_WINDOW) -> Tuple[float, Optional[float]]:
    """
    First and first-reflected arrival at one terminal.

    An arrival is the peak of the filtered pulse whose magnitude first exceeds
    1% of the peak-referred RMS reference; the reflected arrival is the next
    rising crossing after a refractory interval.

    Raises:
        ParameterError: Non-positive RMS reference.
        DetectionFailureError: No crossing at all.
    """
    if not rms_reference > 0:
        raise ParameterError(f"RMS reference must be positive, got {rms_reference}")
    magnitude = np.abs(filtered.samples)
    threshold = TDOA_THRESHOLD * rms_reference * math.sqrt(2.0)
    first = _crossing(magnitude, threshold, 0, rising=False)
    if first is None:
        raise DetectionFailureError("no traveling-wave arrival above the detection threshold")
    reflected = _crossing(magnitude, threshold, first + REFRACTORY_WINDOWS * window, rising=True)
    t_first = filtered.t0 + filtered.dt * _peak(magnitude, first, window)
    if reflected is None:
        logger.warning("no reflected arrival after %.1f us", t_first * 1e6)
        return t_first, None
    return t_first, filtered.t0 + filtered.dt * _peak(magnitude, reflected, window)


def detect_arrivals(near: Waveform, far: Waveform, rms_reference: float,
                    far_rms_reference: Optional[float] = None, window: int = TDOA_WINDOW) -> ArrivalTimes:
    """Arrival instants of both terminals from differentiator-smoother outputs."""
    t0, t0r = terminal_arrivals(near, rms_reference, window)
    tL, tLr = terminal_arrivals(far, far_rms_reference or rms_reference, window)
    return ArrivalTimes(t0=t0, t0r=t0r, tL=tL, tLr=tLr)


def prefault_rms(net: NetworkSpec, node: str, model_kind: Optional[ModelKind] = None) -> float:
    """RMS of the strongest pre-fault phase voltage at ``node``."""
    f_power = net.sources[0].frequency if net.sources else POWER_FREQUENCY
    phasors = prefault_phasor(net, f_power, model_kind)[node]
    return float(np.max(np.abs(phasors))) / math.sqrt(2.0)


def tdoa_signal(phases: PhaseTriple) -> Waveform:
    """Single-wire voltage, or the stronger aerial mode of a three-phase measurement."""
    if not np.any(phases.b.samples) and not np.any(phases.c.samples):
        return phases.a
    modal = clarke_forward(phases)
    return modal.alpha if signal_energy(modal.alpha) >= signal_energy(modal.beta) else modal.beta


def _estimate(position: float, length: float, metric: str) -> TdoaEstimate:
    out_of_range = not 0.0 <= position <= length
    if out_of_range:
        logger.warning("%s TDOA estimate %.1f m lies outside the line [0, %.1f] m", metric, position, length)
    return TdoaEstimate(position=position, out_of_range=out_of_range)


def tdoa_classic(times: ArrivalTimes, v: float, length: float) -> TdoaEstimate:
    """x = (L - v (tL - t0)) / 2 from the near terminal."""
    if not (math.isfinite(times.t0) and math.isfinite(times.tL)):
        raise ParameterError("arrival times must be finite")
    return _estimate(0.5 * (length - v * (times.tL - times.t0)), length, 'classic')


def tdoa_setting_free(times: ArrivalTimes, length: float) -> TdoaEstimate:
    """x = L (t0r - t0) / ((t0r - t0) + (tLr - tL)); independent of the wave velocity."""
    if times.t0r is None or times.tLr is None:
        raise DetectionFailureError("setting-free TDOA needs reflected arrivals at both terminals")
    near = times.t0r - times.t0
    far = times.tLr - times.tL
    denominator = near + far
    if denominator == 0:
        raise DegenerateGeometryError("reflection intervals sum to zero")
    if near < 0 or far < 0:
        raise ParameterError("reflected arrivals must follow the first arrivals")
    return _estimate(near / denominator * length, length, 'setting-free')
