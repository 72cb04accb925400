"""
Closed-form references for a single line with a lumped termination, and the
model that predicts the location error caused by frequency-dependent wave
velocity.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from app.config import DEFAULT_TERMINATION
from app.core.linemodel import SPEED_OF_LIGHT, LineModel, VelocityFit, network_modes
from app.database.schemas import NetworkSpec
from app.utils.errors import FitError, ParameterError

logger = logging.getLogger(__name__)

MAX_HARMONIC = 9
POINTS_PER_HARMONIC = 64


@dataclass(frozen=True)
class ErrorModel:
    """
    Predicted location errors of the naive method at one fault distance.

    Attributes:
        fit (VelocityFit): Logarithmic velocity fit of the frequency-dependent line.
        v_fi (float): Constant-parameter velocity used in pre-calculation.
        x_f (float): Fault distance in meters.
        lam (Optional[float]): Measured slope of location error versus position, when known.
        errors (Tuple[Tuple[int, float], ...]): Predicted error in meters for k = 0..9.
    """
    fit: VelocityFit
    v_fi: float
    x_f: float
    lam: Optional[float]
    errors: Tuple[Tuple[int, float], ...]

    def relative(self) -> List[Tuple[int, float]]:
        return [(k, error / self.x_f) for k, error in self.errors]


def reflection_coefficient(z0: float, z_c) -> np.ndarray:
    return (z0 - np.asarray(z_c)) / (z0 + np.asarray(z_c))


def lossless_gamma(omega, v: float = SPEED_OF_LIGHT) -> np.ndarray:
    return 1j * np.asarray(omega, dtype=float) / v


def analytic_terminal(x_f: float, omega, rho0, gamma) -> np.ndarray:
    """
    Terminal-to-fault voltage transfer of a line terminated by ``rho0``.

    Args:
        x_f (float): Fault distance in meters.
        omega: Angular frequencies (kept for signature symmetry; ``gamma`` carries the dispersion).
        rho0: Reflection coefficient at the terminal.
        gamma: Propagation constant at every ``omega``.

    Returns:
        np.ndarray: H(omega) = (1 + rho0) exp(-gamma x_f) / (1 + rho0 exp(-2 gamma x_f)).
    """
    gamma = np.broadcast_to(np.asarray(gamma, dtype=complex), np.shape(omega))
    decay = np.exp(-gamma * x_f)
    return (1.0 + rho0) * decay / (1.0 + rho0 * decay * decay)


def analytic_fcse(x: float, x_f: float, omega, rho0, gamma, u_f, z0: float = DEFAULT_TERMINATION) -> float:
    """Energy of the reverse-process current through a bolted GFL branch at ``x``."""
    gamma = np.broadcast_to(np.asarray(gamma, dtype=complex), np.shape(omega))
    # exp(-g(x - x_f)) / (1 + rho exp(2 g x_f)) rewritten with decaying exponentials only
    ratio = np.exp(-gamma * (x + x_f)) / (np.exp(-2.0 * gamma * x_f) + rho0)
    current = (1.0 + rho0) ** 2 * ratio / (z0 * (1.0 + rho0 * np.exp(-2.0 * gamma * x))) * np.conj(u_f)
    return float(trapezoid(np.abs(current) ** 2, omega))


def analytic_cse(x: float, x_f: float, omega, rho0, gamma, u_f, u) -> float:
    """Energy of the product of the fault transfer at ``x_f`` and the GFL transfer at ``x``."""
    convolution = analytic_terminal(x, omega, rho0, gamma) * analytic_terminal(x_f, omega, rho0, gamma) * u_f * u
    return float(trapezoid(np.abs(convolution) ** 2, omega))


def transfer_maxima(x: float, v: float, k_max: int = MAX_HARMONIC) -> List[float]:
    """Local maxima f_k = (2k + 1) v / (4 x) of the transfer magnitude, k = 0..k_max."""
    if not x > 0 or not v > 0:
        raise ParameterError(f"distance and velocity must be positive, got x={x}, v={v}")
    return [(2 * k + 1) * v / (4.0 * x) for k in range(k_max + 1)]


def phase_velocity(model: LineModel, f) -> np.ndarray:
    omega = 2 * np.pi * np.asarray(f, dtype=float)
    return omega / np.imag(model.gamma(omega))


def fundamental_frequency(x_f: float, model: LineModel, k: int = 0) -> float:
    """Self-consistent maximum f = (2k + 1) v(f) / (4 x_f) of a dispersive line."""
    if not x_f > 0:
        raise ParameterError(f"fault distance must be positive, got {x_f}")
    order = (2 * k + 1) / (4.0 * x_f)

    def mismatch(f: float) -> float:
        return f - order * float(phase_velocity(model, f))

    low, high = 0.05 * order * SPEED_OF_LIGHT, 1.001 * order * SPEED_OF_LIGHT
    if mismatch(low) >= 0 or mismatch(high) <= 0:
        raise FitError(f"no self-consistent harmonic frequency between {low:.0f} and {high:.0f} Hz")
    return float(brentq(mismatch, low, high, xtol=1e-9 * high))


def energy_ratio(x_f: float, rho0: float, model: LineModel, m: float,
                 f_nyquist: float = 5e6, f0: Optional[float] = None) -> float:
    """
    Share of the transfer-function energy below m times the fundamental frequency.

    Integrates |H(f)|^2 on a grid of ``POINTS_PER_HARMONIC`` points per harmonic
    spacing, from 0 Hz (where H = 1) up to ``f_nyquist``.
    """
    if not m > 0:
        raise ParameterError(f"frequency multiple must be positive, got {m}")
    f0 = fundamental_frequency(x_f, model) if f0 is None else f0
    spacing = 2.0 * f0
    n = int(math.ceil(f_nyquist / spacing * POINTS_PER_HARMONIC))
    f = np.linspace(0.0, f_nyquist, n + 1)
    power = np.ones_like(f)
    power[1:] = np.abs(analytic_terminal(x_f, 2 * np.pi * f[1:], rho0, model.gamma(2 * np.pi * f[1:]))) ** 2
    total = trapezoid(power, f)
    cut = int(np.searchsorted(f, min(m * f0, f_nyquist), side='right'))
    if cut >= f.size:
        return 1.0
    return float(trapezoid(power[:cut], f[:cut]) / total)


def predict_error(x_f: float, fit: VelocityFit, v_fi: float, k: int) -> float:
    """
    Location error of the naive method attributed to the k-th harmonic.

    Returns the raw ratio (v(f_k) - v_fi) / (v(f_k) - v_c) * x_f with f_k the
    constant-velocity harmonic; denominators below 1% of v_fi are only warned about.

    Raises:
        ParameterError: k outside 0..9.
        FitError: Vanishing denominator.
    """
    if not 0 <= k <= MAX_HARMONIC:
        raise ParameterError(f"harmonic index must lie in 0..{MAX_HARMONIC}, got {k}")
    f_k = transfer_maxima(x_f, v_fi, k)[k]
    v_k = float(fit.velocity(f_k))
    denominator = v_k - fit.v_c
    if abs(denominator) < 1e-12 * v_fi:
        raise FitError(f"error model denominator vanishes at k={k}")
    if abs(denominator) < 0.01 * v_fi:
        logger.warning("error model denominator %.3g m/s is below 1%% of v_fi at k=%d", denominator, k)
    return (v_k - v_fi) / denominator * x_f


def build_error_model(fit: VelocityFit, v_fi: float, x_f: float, lam: Optional[float] = None) -> ErrorModel:
    errors = tuple((k, predict_error(x_f, fit, v_fi, k)) for k in range(MAX_HARMONIC + 1))
    return ErrorModel(fit=fit, v_fi=v_fi, x_f=x_f, lam=lam, errors=errors)


def fit_lambda(true_positions: Sequence[float], predicted_positions: Sequence[float]) -> Tuple[float, float]:
    """
    Through-origin least-squares slope of the location error (true - predicted)
    against the predicted position.

    Returns:
        Tuple[float, float]: Slope and coefficient of determination.
    """
    truth = np.asarray(true_positions, dtype=float)
    predicted = np.asarray(predicted_positions, dtype=float)
    if truth.shape != predicted.shape or truth.size < 3:
        raise FitError("slope fit needs at least three paired scenarios")
    norm = float(np.dot(predicted, predicted))
    if norm == 0:
        raise FitError("all predicted positions are zero")
    errors = truth - predicted
    lam = float(np.dot(errors, predicted) / norm)
    ss_res = float(np.sum((errors - lam * predicted) ** 2))
    ss_tot = float(np.sum((errors - errors.mean()) ** 2))
    if ss_tot == 0:
        return lam, 1.0 if ss_res == 0 else 0.0
    return lam, 1.0 - ss_res / ss_tot


def terminal_reflection(net: NetworkSpec) -> float:
    """Reflection coefficient of the measurement-node termination seen from the constant-parameter line."""
    termination = next((item.impedance for item in net.terminations if item.node == net.measurement), None)
    if termination is None:
        raise ParameterError(f"measurement node '{net.measurement}' has no termination")
    surge = network_modes(net.geometry, net.ground, 'constant')[0].surge
    return float(reflection_coefficient(termination, surge))
