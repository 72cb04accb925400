"""
Per-unit-length line parameters and modal propagation models.

Every model is evaluated on the complex Laplace axis ``s = sigma + j*omega`` so
the damped frequency-domain solver can use it directly; ``gamma``/``z_c`` are
the ``s = j*omega`` restriction.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple
import itertools
import math

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT, epsilon_0, mu_0

from app.database.schemas import GroundModel, ModelKind, WireGeometry
from app.utils.errors import (FitError,
                              GeometryError,
                              ParameterError,
                              SingularFrequencyError,
                              UnsupportedConfigurationError
                              )


def _as_complex(s) -> np.ndarray:
    return np.asarray(s, dtype=complex)


def sunde_ground_impedance(s, ground: GroundModel, height: float) -> np.ndarray:
    """Sunde's logarithmic ground-return impedance per meter for an equivalent height."""
    s = _as_complex(s)
    if ground.perfect:
        return np.zeros_like(s)
    gamma_g = np.sqrt(s * mu_0 * (ground.conductivity + s * epsilon_0 * ground.relative_permittivity))
    x = gamma_g * height
    return s * mu_0 / (2 * np.pi) * np.log((1.0 + x) / x)


def internal_impedance(s, radius: float, conductivity: float) -> np.ndarray:
    """Skin-effect surface impedance with a DC resistance floor."""
    s = _as_complex(s)
    r_dc = 1.0 / (conductivity * np.pi * radius ** 2)
    z_skin = np.sqrt(s * mu_0 / conductivity) / (2 * np.pi * radius)
    return np.sqrt(r_dc ** 2 + z_skin ** 2)


class LineModel:
    """Scalar (single-wire or modal) line: propagation constant and surge impedance."""
    kind: ModelKind

    @property
    def v_fi(self) -> float:
        raise NotImplementedError

    def propagation(self, s) -> np.ndarray:
        raise NotImplementedError

    def surge_impedance(self, s) -> np.ndarray:
        raise NotImplementedError

    def gamma(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise SingularFrequencyError("propagation constant requested at omega <= 0")
        return self.propagation(1j * omega)

    def z_c(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise SingularFrequencyError("surge impedance requested at omega <= 0")
        return self.surge_impedance(1j * omega)


@dataclass(frozen=True)
class ConstantLineModel(LineModel):
    inductance: float
    capacitance: float
    resistance: float = 0.0
    kind: ModelKind = 'constant'

    @property
    def v_fi(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)

    @property
    def surge(self) -> float:
        return math.sqrt(self.inductance / self.capacitance)

    def propagation(self, s) -> np.ndarray:
        s = _as_complex(s)
        return s / self.v_fi + self.resistance / (2.0 * self.surge)

    def surge_impedance(self, s) -> np.ndarray:
        return np.full_like(_as_complex(s), self.surge)


@dataclass(frozen=True)
class FrequencyDependentLineModel(LineModel):
    """
    Lossy-ground line: Z'(s) = s L' + Z_int(s) + sum(coef * Z_sunde(s, h)), Y'(s) = s C'.

    Attributes:
        inductance (float): External inductance in H/m.
        capacitance (float): Capacitance in F/m.
        radius (float): Conductor radius in meters.
        conductor_conductivity (float): Conductor conductivity in S/m.
        ground (GroundModel): Ground under the line.
        ground_terms (Tuple[Tuple[float, float], ...]): (coefficient, equivalent height) pairs of the ground-return sum.
    """
    inductance: float
    capacitance: float
    radius: float
    conductor_conductivity: float
    ground: GroundModel
    ground_terms: Tuple[Tuple[float, float], ...]
    kind: ModelKind = 'frequency_dependent'

    @property
    def v_fi(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)

    def series_impedance(self, s) -> np.ndarray:
        s = _as_complex(s)
        z = s * self.inductance + internal_impedance(s, self.radius, self.conductor_conductivity)
        for coefficient, height in self.ground_terms:
            z = z + coefficient * sunde_ground_impedance(s, self.ground, height)
        return z

    def shunt_admittance(self, s) -> np.ndarray:
        return _as_complex(s) * self.capacitance

    def propagation(self, s) -> np.ndarray:
        # principal root keeps Re(gamma) >= 0
        return np.sqrt(self.series_impedance(s) * self.shunt_admittance(s))

    def surge_impedance(self, s) -> np.ndarray:
        s = _as_complex(s)
        return self.series_impedance(s) / self.propagation(s)


@dataclass(frozen=True)
class ModalLineSet:
    ground_mode: LineModel
    alpha_mode: LineModel
    beta_mode: LineModel

    @property
    def modes(self) -> Tuple[LineModel, LineModel, LineModel]:
        return self.ground_mode, self.alpha_mode, self.beta_mode


@dataclass(frozen=True)
class VelocityFit:
    v_c: float
    f0: float
    v_f0: float
    r_squared: float

    def velocity(self, f) -> np.ndarray:
        return self.v_c * np.log(np.asarray(f, dtype=float) / self.f0) + self.v_f0


def _check_geometry(geom: WireGeometry):
    if not geom.radius > 0 or geom.radius >= geom.height:
        raise GeometryError(f"conductor radius {geom.radius} m must be positive and below height {geom.height} m")
    if geom.conductor_conductivity <= 0:
        raise GeometryError("conductor conductivity must be positive")


def _log_ratio(geom: WireGeometry) -> float:
    return math.log(2.0 * geom.height / geom.radius)


def pul_constant(geom: WireGeometry) -> ConstantLineModel:
    """Lossless image-theory parameters of a single conductor above ground."""
    _check_geometry(geom)
    ratio = _log_ratio(geom)
    return ConstantLineModel(inductance=mu_0 / (2 * np.pi) * ratio,
                             capacitance=2 * np.pi * epsilon_0 / ratio)


def single_wire(geom: WireGeometry, ground: GroundModel, kind: ModelKind = 'frequency_dependent') -> LineModel:
    constant = pul_constant(geom)
    if kind == 'constant':
        return constant
    return FrequencyDependentLineModel(inductance=constant.inductance,
                                       capacitance=constant.capacitance,
                                       radius=geom.radius,
                                       conductor_conductivity=geom.conductor_conductivity,
                                       ground=ground,
                                       ground_terms=((1.0, geom.height),))


def gamma_fd(omega, geom: WireGeometry, ground: GroundModel) -> np.ndarray:
    return single_wire(geom, ground, 'frequency_dependent').gamma(omega)


def _mutual_distances(geom: WireGeometry) -> List[Tuple[float, float]]:
    pairs = []
    for i, j in itertools.combinations(range(geom.n_phases), 2):
        d = abs(geom.horizontal_offsets[i] - geom.horizontal_offsets[j])
        if d <= 2 * geom.radius:
            raise GeometryError(f"phases {i} and {j} overlap (spacing {d} m)")
        pairs.append((d, math.hypot(d, 2.0 * geom.height)))
    return pairs


def modal_lines(geom: WireGeometry, ground: GroundModel, kind: ModelKind = 'frequency_dependent') -> ModalLineSet:
    """
    Ground and aerial mode models of a balanced three-phase line.

    Self and mutual per-unit-length terms are averaged (ideal transposition)
    before reduction: the ground mode sees Zs + 2 Zm, the aerial modes Zs - Zm.

    Raises:
        UnsupportedConfigurationError: For a non-transposed line whose phases are not equidistant.
    """
    _check_geometry(geom)
    if geom.n_phases != 3:
        raise UnsupportedConfigurationError("modal decomposition needs a three-phase geometry")
    pairs = _mutual_distances(geom)
    if not geom.transposed and len({round(d, 9) for d, _ in pairs}) > 1:
        raise UnsupportedConfigurationError("untransposed line with unequal phase spacing is not balanced")

    self_log = _log_ratio(geom)
    mutual_log = float(np.mean([math.log(image / d) for d, image in pairs]))
    modes = []
    for weight in (2.0, -1.0, -1.0):
        log_term = self_log + weight * mutual_log
        inductance = mu_0 / (2 * np.pi) * log_term
        capacitance = 2 * np.pi * epsilon_0 / log_term
        if kind == 'constant':
            modes.append(ConstantLineModel(inductance=inductance, capacitance=capacitance))
            continue
        terms = ((1.0, geom.height),) + tuple((weight / len(pairs), image / 2.0) for _, image in pairs)
        modes.append(FrequencyDependentLineModel(inductance=inductance,
                                                 capacitance=capacitance,
                                                 radius=geom.radius,
                                                 conductor_conductivity=geom.conductor_conductivity,
                                                 ground=ground,
                                                 ground_terms=terms))
    # alpha and beta share one object so callers can cache per model
    return ModalLineSet(modes[0], modes[1], modes[1])


def velocity_curve(model: LineModel, f_min: float, f_max: float, n: int) -> List[Tuple[float, float]]:
    if not 0 < f_min < f_max:
        raise ParameterError(f"need 0 < f_min < f_max, got {f_min}, {f_max}")
    if n < 2:
        raise ParameterError("velocity curve needs at least two points")
    frequencies = np.logspace(math.log10(f_min), math.log10(f_max), n)
    omega = 2 * np.pi * frequencies
    velocity = omega / np.imag(model.gamma(omega))
    return list(zip(frequencies.tolist(), velocity.tolist()))


def fit_log_velocity(curve: Sequence[Tuple[float, float]], f0: float) -> VelocityFit:
    """Least-squares fit of v(f) = v_c ln(f/f0) + v(f0)."""
    if len(curve) < 3:
        raise FitError("logarithmic velocity fit needs at least three points")
    f = np.array([point[0] for point in curve], dtype=float)
    v = np.array([point[1] for point in curve], dtype=float)
    if np.ptp(f) <= 0:
        raise FitError("velocity curve covers a single frequency")
    if not f.min() <= f0 <= f.max():
        raise FitError(f"reference frequency {f0} Hz is outside the curve range")
    v_c, v_f0 = np.polyfit(np.log(f / f0), v, 1)
    residual = v - (v_c * np.log(f / f0) + v_f0)
    ss_res = float(np.dot(residual, residual))
    ss_tot = float(np.sum((v - v.mean()) ** 2))
    scale = (1e-12 * np.abs(v).mean()) ** 2 * v.size
    if ss_tot <= scale:
        return VelocityFit(v_c=0.0, f0=f0, v_f0=float(v.mean()), r_squared=1.0)
    r_squared = min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return VelocityFit(v_c=float(v_c), f0=f0, v_f0=float(v_f0), r_squared=r_squared)


def network_modes(geom: WireGeometry, ground: GroundModel, kind: ModelKind) -> List[LineModel]:
    """Scalar models of every decoupled mode: one for a single wire, three for a three-phase line."""
    if geom.n_phases == 1:
        return [single_wire(geom, ground, kind)]
    return list(modal_lines(geom, ground, kind).modes)


__all__ = ['SPEED_OF_LIGHT', 'LineModel', 'ConstantLineModel', 'FrequencyDependentLineModel', 'ModalLineSet',
           'VelocityFit', 'pul_constant', 'single_wire', 'gamma_fd', 'modal_lines', 'velocity_curve',
           'fit_log_velocity', 'network_modes', 'sunde_ground_impedance', 'internal_impedance']
