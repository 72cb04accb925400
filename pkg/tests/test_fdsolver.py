import math

import numpy as np
import pytest

from app.core.fdsolver import (SegmentKernel,
                               SolveGrid,
                               fault_incidence,
                               inception_time,
                               line_two_port,
                               prefault_phasor,
                               simulate_fault,
                               simulate_fault_at,
                               simulate_gfl_excitation,
                               solve_frequency
                               )
from app.core.linemodel import SPEED_OF_LIGHT, network_modes, pul_constant
from app.core.network import BranchTemplate, insert_branch
from app.core.signal import Waveform, signal_energy
from app.database.schemas import FaultSpec, FaultType, WireGeometry
from app.utils.errors import ConfigurationError, ParameterError, RangeError, UnsupportedConfigurationError


def test_default_grid_arithmetic():
    grid = SolveGrid.build(1e-7, 5e-3)
    assert grid.n_samples == 50000
    assert grid.n_fft == 2 ** 17
    assert grid.n_bins == 2 ** 16 + 1
    assert grid.damping > 0


def test_grid_honours_min_fft():
    assert SolveGrid.build(1e-6, 5e-3, min_fft=4096).n_fft == 2 ** 14
    assert SolveGrid.build(1e-6, 5e-3, min_fft=2 ** 16).n_fft == 2 ** 16


def test_records_shorter_than_five_milliseconds_are_rejected():
    with pytest.raises(ConfigurationError):
        SolveGrid.build(1e-7, 2.5e-4)
    with pytest.raises(ConfigurationError):
        SolveGrid(dt=1e-6, n_samples=4000, damping=0.0, n_fft=2 ** 13)


def test_grid_rejects_short_transform():
    with pytest.raises(ParameterError):
        SolveGrid(dt=1e-7, n_samples=100, damping=0.0, n_fft=128)


def test_grid_spectrum_rejects_other_dt(grid):
    with pytest.raises(ParameterError):
        grid.spectrum(Waveform(2e-7, np.ones(10)))


def test_lossless_two_port_matches_hyperbolic_form():
    model = pul_constant(WireGeometry(height=10.0, radius=0.005))
    s = np.array([1e4 + 2j * np.pi * 1e5])
    y = line_two_port(model, 1500.0, s)[0]
    x = s[0] / model.v_fi * 1500.0
    assert y[0, 0] == pytest.approx(1.0 / (np.tanh(x) * model.surge), rel=1e-9)
    assert y[0, 1] == pytest.approx(-1.0 / (np.sinh(x) * model.surge), rel=1e-9)
    assert y[1, 0] == y[0, 1]


def test_two_port_rejects_zero_length():
    with pytest.raises(ParameterError):
        line_two_port(pul_constant(WireGeometry(height=10.0, radius=0.005)), 0.0, np.array([1j]))


def test_fault_incidence_shapes():
    incidence, impedance = fault_incidence(FaultType.PG_B, 10.0)
    assert incidence[:, 0].tolist() == [0.0, 1.0, 0.0]
    assert impedance.tolist() == [[10.0]]
    incidence, _ = fault_incidence(FaultType.PP_AB, 1.0)
    assert incidence[:, 0].tolist() == [1.0, -1.0, 0.0]
    incidence, impedance = fault_incidence(FaultType.THREE_PHASE, 1.0)
    assert incidence.shape == (3, 2) and impedance.shape == (2, 2)


def test_single_phase_network_only_supports_phase_to_ground():
    with pytest.raises(UnsupportedConfigurationError):
        fault_incidence(FaultType.PP_BC, 1.0, n_phases=1)


def test_power_frequency_divider(single_net):
    solution = solve_frequency(single_net, 2j * np.pi * 50.0)
    # source, local termination and remote termination are three equal shunts
    assert abs(solution.at('S')[0, 0]) == pytest.approx(10000.0 / 3, rel=1e-2)
    assert solution.residual < 1e-8


def test_bolted_branch_shorts_its_node(single_net):
    faulted, node = insert_branch(single_net, ('L1', 2000.0), BranchTemplate(FaultType.PG_A, 0.0))
    phasors = prefault_phasor(faulted)
    assert abs(phasors[node][0]) < 1e-6 * 10000.0
    assert set(phasors) == set(faulted.nodes)


def test_three_phase_prefault_is_balanced(three_phase_net):
    phasors = prefault_phasor(three_phase_net)['S']
    assert abs(phasors.sum()) < 1e-6 * abs(phasors[0])
    assert np.angle(phasors[1] / phasors[0]) == pytest.approx(-2 * np.pi / 3, abs=1e-6)


def test_inception_time():
    assert inception_time(1.0 + 0j, 90.0, 50.0) == pytest.approx(5e-3)
    assert inception_time(1j, 90.0, 50.0) == pytest.approx(0.0, abs=1e-12)


def test_zero_crossing_inception_launches_a_weak_front(single_net, grid):
    peak = simulate_fault(single_net, FaultSpec(segment='L1', position=1000.0, impedance=1.0,
                                                inception_angle=90.0), grid)
    crossing = simulate_fault(single_net, FaultSpec(segment='L1', position=1000.0, impedance=1.0,
                                                    inception_angle=0.0), grid)
    # the front reaches S after about 33 samples; compare the first 25 us
    front = slice(0, 250)
    assert np.max(np.abs(crossing.a.samples[front])) < 0.02 * np.max(np.abs(peak.a.samples[front]))


def test_fault_impedance_damps_the_transient(single_net, grid):
    low = simulate_fault(single_net, FaultSpec(segment='L1', position=1000.0, impedance=1.0), grid)
    high = simulate_fault(single_net, FaultSpec(segment='L1', position=1000.0, impedance=100.0), grid)
    assert np.max(np.abs(high.a.samples)) < np.max(np.abs(low.a.samples))


def test_single_phase_simulation_pads_empty_phases(single_net, grid):
    phases = simulate_fault(single_net, FaultSpec(segment='L1', position=1000.0), grid)
    assert len(phases) == grid.n_samples
    assert not np.any(phases.b.samples) and not np.any(phases.c.samples)


def test_fault_beyond_segment_is_rejected(single_net, grid):
    with pytest.raises(RangeError):
        simulate_fault(single_net, FaultSpec(segment='L1', position=2500.0), grid)


def test_both_terminals_observed(single_net, grid):
    observed = simulate_fault_at(single_net, FaultSpec(segment='L1', position=500.0), grid, ('S', 'R'))
    assert set(observed) == {'S', 'R'}
    assert signal_energy(observed['R'].a) > 0


def _first_arrival(samples: np.ndarray, fraction: float = 0.05) -> int:
    magnitude = np.abs(samples)
    return int(np.argmax(magnitude > fraction * magnitude.max()))


def test_gfl_response_arrives_later_from_farther_away(single_net, grid, impulse):
    near = simulate_gfl_excitation(single_net, ('L1', 500.0), FaultType.PG_A, impulse, grid)
    far = simulate_gfl_excitation(single_net, ('L1', 1500.0), FaultType.PG_A, impulse, grid)
    assert _first_arrival(near.a.samples) < _first_arrival(far.a.samples)


def test_gfl_response_is_linear_in_the_excitation(single_net, grid, impulse):
    once = simulate_gfl_excitation(single_net, ('L1', 500.0), FaultType.PG_A, impulse, grid)
    twice = simulate_gfl_excitation(single_net, ('L1', 500.0), FaultType.PG_A, impulse.scaled(2.0), grid)
    assert np.allclose(twice.a.samples, 2.0 * once.a.samples, rtol=1e-9, atol=1e-9 * np.max(np.abs(once.a.samples)))


def test_three_phase_ground_fault_excites_ground_mode(three_phase_net, grid):
    phases = simulate_fault(three_phase_net, FaultSpec(segment='L1', position=1000.0,
                                                       fault_type=FaultType.PG_A), grid)
    energies = [signal_energy(phases.phase(name)) for name in 'abc']
    assert energies[0] == max(energies)
    assert math.isclose(energies[1], energies[2], rel_tol=1e-6)


def _input_impedance(z_c, gamma, length, load):
    t = np.tanh(gamma * length)
    return z_c * (load + z_c * t) / (z_c + load * t)


def test_two_terminal_fault_matches_the_closed_form(line_20km):
    dead = line_20km.model_copy(update={'sources': ()})
    faulted, node = insert_branch(dead, ('L1', 15000.0), BranchTemplate(FaultType.PG_A, 10.0))
    f = np.logspace(3, 6, 25)
    s = 500.0 + 2j * np.pi * f
    # a 1 V Thevenin source behind the fault resistance
    solution = solve_frequency(faulted, s, {node: 1.0 / 10.0})

    model = network_modes(line_20km.geometry, line_20km.ground, 'constant')[0]
    gamma, z_c = model.propagation(s), model.surge_impedance(s)
    z_left = _input_impedance(z_c, gamma, 15000.0, 10000.0)
    z_right = _input_impedance(z_c, gamma, 5000.0, 10000.0)
    z_parallel = z_left * z_right / (z_left + z_right)
    v_fault = z_parallel / (10.0 + z_parallel)
    x = gamma * 15000.0
    v_s = v_fault / (np.cosh(x) + z_c / 10000.0 * np.sinh(x))

    assert np.allclose(solution.at('S')[:, 0], v_s, rtol=1e-6, atol=0.0)
    assert solution.residual < 1e-10


def test_healthy_split_leaves_the_solution_unchanged(line_20km):
    s = 500.0 + 2j * np.pi * np.array([50.0, 1e3, 1e5])
    split, node = insert_branch(line_20km, ('L1', 7000.0), None)
    assert node not in line_20km.nodes
    whole = solve_frequency(line_20km, s)
    parts = solve_frequency(split, s)
    for terminal in ('S', 'R'):
        assert np.allclose(parts.at(terminal), whole.at(terminal), rtol=1e-9, atol=0.0)


def test_transfer_impedance_is_reciprocal(branched_net):
    dead = branched_net.model_copy(update={'sources': ()})
    s = 1e3 + 2j * np.pi * np.array([1e3, 3e4, 7e5])
    from_a = solve_frequency(dead, s, {'A': 1.0})
    from_b = solve_frequency(dead, s, {'B': 1.0})
    assert np.allclose(from_a.at('B'), from_b.at('A'), rtol=1e-9, atol=0.0)


def test_cascaded_halves_reduce_to_the_whole_section(line_20km):
    model = network_modes(line_20km.geometry, line_20km.ground, 'frequency_dependent')[0]
    s = 1e3 + 2j * np.pi * np.array([1e3, 1e4, 1e5])
    whole = line_two_port(model, 10000.0, s)
    half = line_two_port(model, 5000.0, s)
    # nodes 0 and 2 outside, node 1 in the middle
    matrix = np.zeros((s.size, 3, 3), dtype=complex)
    matrix[:, :2, :2] += half
    matrix[:, 1:, 1:] += half
    outer = [0, 2]
    reduced = (matrix[:, outer][:, :, outer]
               - matrix[:, outer][:, :, [1]] @ matrix[:, [1]][:, :, outer] / matrix[:, 1, 1][:, None, None])
    assert np.allclose(reduced, whole, rtol=1e-10, atol=1e-10 * np.max(np.abs(whole)))


def test_fault_transient_is_causal(line_20km, grid):
    phases = simulate_fault(line_20km, FaultSpec(segment='L1', position=15000.0), grid)
    v = phases.a.samples
    arrival = 15000.0 / SPEED_OF_LIGHT / grid.dt
    assert np.max(np.abs(v[:int(math.floor(arrival)) - 1])) <= 1e-6 * np.max(np.abs(v))
    first = int(np.argmax(np.abs(v) > 0.2 * np.max(np.abs(v))))
    assert abs(first - arrival) <= 2.0


def test_onset_follows_the_shortest_line_path(branched_net, grid):
    kernel = SegmentKernel(branched_net, 'BA', grid, ('M', 'B'))
    # 1400 m to M and 1000 m to B, one guard sample early
    assert kernel.onset(400.0) == [45, 32]
    assert kernel.onset(0.0) == [32, 19]


def test_gfl_excitation_rejects_positions_off_the_segment(single_net, grid, impulse):
    with pytest.raises(RangeError):
        simulate_gfl_excitation(single_net, ('L1', 2500.0), FaultType.PG_A, impulse, grid)
    with pytest.raises(RangeError):
        simulate_gfl_excitation(single_net, ('L9', 500.0), FaultType.PG_A, impulse, grid)
