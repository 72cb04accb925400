import numpy as np
import pytest

from app.core.analysis import (analytic_cse,
                               analytic_fcse,
                               analytic_terminal,
                               build_error_model,
                               energy_ratio,
                               fit_lambda,
                               fundamental_frequency,
                               lossless_gamma,
                               predict_error,
                               reflection_coefficient,
                               terminal_reflection,
                               transfer_maxima
                               )
from app.core.linemodel import VelocityFit, network_modes, pul_constant
from app.core.network import parse_network
from app.database.schemas import WireGeometry
from app.utils.errors import FitError, ParameterError
from tests.conftest import config_bytes

X_F = 10000.0
RHO = 0.9


@pytest.fixture
def lossless():
    return pul_constant(WireGeometry(height=10.0, radius=0.005))


@pytest.fixture
def fit():
    return VelocityFit(v_c=2e6, f0=1e3, v_f0=2.7e8, r_squared=1.0)


def test_transfer_maxima_are_odd_quarter_waves():
    assert transfer_maxima(1000.0, 3e8, 2) == pytest.approx([75e3, 225e3, 375e3])


@pytest.mark.parametrize('x, v', [(0.0, 3e8), (1000.0, -1.0)])
def test_transfer_maxima_need_positive_inputs(x, v):
    with pytest.raises(ParameterError):
        transfer_maxima(x, v)


def test_terminal_transfer_is_unity_at_dc():
    assert analytic_terminal(X_F, np.array([0.0]), RHO, np.array([0.0]))[0] == pytest.approx(1.0)


def test_terminal_transfer_peaks_on_the_quarter_wave(lossless):
    f0 = transfer_maxima(X_F, lossless.v_fi, 0)[0]
    omega = 2 * np.pi * np.array([f0, 2 * f0])
    peak, trough = np.abs(analytic_terminal(X_F, omega, RHO, lossless_gamma(omega, lossless.v_fi)))
    assert peak == pytest.approx((1 + RHO) / (1 - RHO))
    assert trough == pytest.approx(1.0)


def test_fundamental_of_a_lossless_line(lossless):
    assert fundamental_frequency(X_F, lossless) == pytest.approx(lossless.v_fi / (4 * X_F), rel=1e-6)


def test_energy_ratio_grows_with_bandwidth(lossless):
    narrow = energy_ratio(X_F, RHO, lossless, 1.0)
    wide = energy_ratio(X_F, RHO, lossless, 20.0)
    assert 0.0 < narrow < wide <= 1.0


def test_energy_ratio_beyond_nyquist_is_complete(lossless):
    assert energy_ratio(X_F, RHO, lossless, 1e6, f_nyquist=1e5) == 1.0


def test_energy_ratio_needs_positive_multiple(lossless):
    with pytest.raises(ParameterError):
        energy_ratio(X_F, RHO, lossless, 0.0)


def test_convolution_energies_are_positive(lossless):
    omega = 2 * np.pi * np.linspace(1e3, 1e5, 200)
    gamma = lossless_gamma(omega, lossless.v_fi)
    u = np.ones_like(omega)
    assert analytic_cse(5000.0, X_F, omega, RHO, gamma, u, u) > 0
    assert analytic_fcse(5000.0, X_F, omega, RHO, gamma, u) > 0


def test_predicted_error_formula(fit):
    v_fi = 3e8
    f_k = transfer_maxima(X_F, v_fi, 3)[3]
    v_k = float(fit.velocity(f_k))
    expected = (v_k - v_fi) / (v_k - fit.v_c) * X_F
    assert predict_error(X_F, fit, v_fi, 3) == pytest.approx(expected)


def test_error_model_covers_ten_harmonics(fit):
    model = build_error_model(fit, 3e8, X_F)
    assert [k for k, _ in model.errors] == list(range(10))
    assert model.relative()[0][1] == pytest.approx(model.errors[0][1] / X_F)


def test_harmonic_index_is_bounded(fit):
    with pytest.raises(ParameterError):
        predict_error(X_F, fit, 3e8, 10)


def test_lambda_fit_recovers_a_proportional_error():
    predicted = np.array([10e3, 20e3, 40e3, 80e3])
    lam, r_squared = fit_lambda(predicted * 1.02, predicted)
    assert lam == pytest.approx(0.02)
    assert r_squared == pytest.approx(1.0)


def test_lambda_fit_needs_three_scenarios():
    with pytest.raises(FitError):
        fit_lambda([1.0, 2.0], [1.0, 2.0])


def test_measurement_termination_reflection(single_net):
    surge = network_modes(single_net.geometry, single_net.ground, 'constant')[0].surge
    rho = terminal_reflection(single_net)
    assert rho == pytest.approx(float(reflection_coefficient(10000.0, surge)))
    assert 0.8 < rho < 1.0


def test_reflection_needs_a_termination(single_config):
    single_config['terminations'] = [{'node': 'R', 'impedance': 10000.0}]
    with pytest.raises(ParameterError):
        terminal_reflection(parse_network(config_bytes(single_config)))
