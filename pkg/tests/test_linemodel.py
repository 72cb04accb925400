import math

import numpy as np
import pytest

from app.core.linemodel import (SPEED_OF_LIGHT,
                                fit_log_velocity,
                                modal_lines,
                                network_modes,
                                pul_constant,
                                single_wire,
                                velocity_curve
                                )
from app.database.schemas import GroundModel, WireGeometry
from app.utils.errors import FitError, ParameterError, UnsupportedConfigurationError

WIRE = WireGeometry(height=10.0, radius=0.005)
THREE_PHASE = WireGeometry(height=10.0, radius=0.005, horizontal_offsets=(-1.0, 0.0, 1.0))


def test_constant_line_travels_at_light_speed():
    model = pul_constant(WIRE)
    assert model.v_fi == pytest.approx(SPEED_OF_LIGHT, rel=1e-9)
    assert model.surge == pytest.approx(60.0 * math.log(2 * 10.0 / 0.005), rel=1e-3)


def test_frequency_dependent_velocity_is_below_light_speed_and_rises():
    model = single_wire(WIRE, GroundModel(resistivity=100.0))
    curve = velocity_curve(model, 1e3, 1e7, 20)
    velocities = np.array([v for _, v in curve])
    assert np.all(velocities < SPEED_OF_LIGHT)
    assert velocities[-1] > velocities[0]


def test_lossier_ground_slows_the_wave():
    omega = 2 * np.pi * 1e4
    slow = single_wire(WIRE, GroundModel(resistivity=1000.0))
    fast = single_wire(WIRE, GroundModel(resistivity=10.0))
    v_slow = omega / np.imag(slow.gamma(omega))
    v_fast = omega / np.imag(fast.gamma(omega))
    assert v_slow < v_fast


def test_ground_conductivity_alias():
    assert GroundModel.model_validate({'conductivity': 0.1}).resistivity == pytest.approx(10.0)


def test_aerial_modes_share_one_model():
    modes = modal_lines(THREE_PHASE, GroundModel(resistivity=1000.0))
    assert modes.alpha_mode is modes.beta_mode
    omega = 2 * np.pi * 1e5
    v_ground = omega / np.imag(modes.ground_mode.gamma(omega))
    v_aerial = omega / np.imag(modes.alpha_mode.gamma(omega))
    assert v_ground < v_aerial


def test_constant_modal_lines_are_lossless():
    for mode in modal_lines(THREE_PHASE, GroundModel(), 'constant').modes:
        assert mode.v_fi == pytest.approx(SPEED_OF_LIGHT, rel=1e-9)


def test_network_modes_count():
    assert len(network_modes(WIRE, GroundModel(), 'constant')) == 1
    assert len(network_modes(THREE_PHASE, GroundModel(), 'constant')) == 3


def test_modal_lines_need_three_phases():
    with pytest.raises(UnsupportedConfigurationError):
        modal_lines(WIRE, GroundModel())


def test_untransposed_unequal_spacing_is_rejected():
    geometry = WireGeometry(height=10.0, radius=0.005, horizontal_offsets=(-1.0, 0.0, 2.0), transposed=False)
    with pytest.raises(UnsupportedConfigurationError):
        modal_lines(geometry, GroundModel())


def test_geometry_rejects_radius_above_height():
    with pytest.raises(ValueError):
        WireGeometry(height=0.001, radius=0.005)


def test_log_fit_recovers_synthetic_curve():
    f = np.logspace(3, 7, 30)
    curve = list(zip(f, 2e6 * np.log(f / 1e3) + 2.5e8))
    fit = fit_log_velocity(curve, 1e3)
    assert fit.v_c == pytest.approx(2e6, rel=1e-9)
    assert fit.v_f0 == pytest.approx(2.5e8, rel=1e-9)
    assert fit.r_squared == pytest.approx(1.0)
    assert float(fit.velocity(1e5)) == pytest.approx(2e6 * math.log(100) + 2.5e8)


def test_log_fit_of_flat_curve_has_zero_slope():
    f = np.logspace(3, 6, 10)
    fit = fit_log_velocity(list(zip(f, np.full(10, 2.9e8))), 1e3)
    assert fit.v_c == 0.0
    assert fit.r_squared == 1.0


def test_log_fit_needs_three_points():
    with pytest.raises(FitError):
        fit_log_velocity([(1e3, 2.9e8), (1e4, 2.95e8)], 1e3)


def test_log_fit_reference_outside_range():
    f = np.logspace(3, 6, 10)
    with pytest.raises(FitError):
        fit_log_velocity(list(zip(f, 2.9e8 + f)), 1e8)


def test_velocity_curve_needs_ordered_range():
    with pytest.raises(ParameterError):
        velocity_curve(pul_constant(WIRE), 1e6, 1e3, 10)
