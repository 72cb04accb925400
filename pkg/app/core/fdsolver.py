"""
Frequency-domain nodal solver.

Networks are solved per decoupled mode (one scalar network per Clarke mode, or a
single one for single-wire lines) on the damped Laplace axis s = sigma + j*omega.
Fault and GFL branches couple the modes; they are closed in phase coordinates
at the branch node. Time-domain waveforms come back through the numerical
inverse Laplace transform of :mod:`app.core.signal`.
"""
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

from app.config import (CAUSAL_GUARD,
                        GFL_RESISTANCE,
                        MIN_FFT_SIZE,
                        MIN_RECORD_DURATION,
                        POWER_FREQUENCY,
                        TAPER_FRACTION,
                        WRAP_SUPPRESSION
                        )
from app.core.linemodel import SPEED_OF_LIGHT, LineModel, network_modes
from app.core.network import (POSITION_TOLERANCE,
                              distance_from_measurement,
                              insert_branch,
                              node_distances,
                              validate_position
                              )
from app.core.signal import (CLARKE,
                             CLARKE_INVERSE,
                             PhaseTriple,
                             Spectrum,
                             Waveform,
                             damped_spectrum,
                             inverse_damped_spectrum,
                             next_pow2
                             )
from app.database.schemas import FaultSpec, FaultType, ModelKind, NetworkSpec
from app.utils.errors import (ConfigurationError,
                              ParameterError,
                              SingularFrequencyError,
                              TopologyError,
                              UnsupportedConfigurationError
                              )

logger = logging.getLogger(__name__)

SHIFTS = np.radians([0.0, -120.0, 120.0])
MIN_BRANCH_IMPEDANCE = 1e-9


@dataclass(frozen=True)
class SolveGrid:
    """
    Sampling grid of one transient solution.

    Attributes:
        dt (float): Time step in seconds.
        n_samples (int): Samples returned per waveform.
        damping (float): Laplace shift sigma in 1/s.
        n_fft (int): Transform length (power of two, at least twice ``n_samples``).
    """
    dt: float
    n_samples: int
    damping: float
    n_fft: int

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if self.n_samples < 2:
            raise ParameterError("a solve grid needs at least two samples")
        if self.damping < 0:
            raise ParameterError("damping must be non-negative")
        if self.n_fft & (self.n_fft - 1) or self.n_fft < 2 * self.n_samples:
            raise ParameterError(f"transform length {self.n_fft} must be a power of two "
                                 f"covering twice the {self.n_samples} samples")
        if self.duration < MIN_RECORD_DURATION * (1.0 - 1e-9):
            raise ConfigurationError(f"record of {self.duration * 1e3:g} ms is shorter than the "
                                     f"{MIN_RECORD_DURATION * 1e3:g} ms the location method needs")

    @classmethod
    def build(cls, dt: float, duration: float, min_fft: Optional[int] = None) -> "SolveGrid":
        if not dt > 0 or not duration > 0:
            raise ParameterError(f"dt and duration must be positive, got dt={dt}, duration={duration}")
        n_samples = int(round(duration / dt))
        n_fft = max(min_fft or MIN_FFT_SIZE, next_pow2(2 * n_samples))
        n_fft = next_pow2(n_fft)
        damping = 2.0 * math.log(1.0 / WRAP_SUPPRESSION) / (n_fft * dt)
        return cls(dt=dt, n_samples=n_samples, damping=damping, n_fft=n_fft)

    @property
    def duration(self) -> float:
        return self.dt * self.n_samples

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def df(self) -> float:
        return 1.0 / (self.n_fft * self.dt)

    @property
    def s(self) -> np.ndarray:
        return self.damping + 2j * np.pi * self.df * np.arange(self.n_bins)

    @property
    def taper(self) -> np.ndarray:
        """Raised-cosine roll-off over the top fraction of the bins."""
        weights = np.ones(self.n_bins)
        start = int(self.n_bins * (1.0 - TAPER_FRACTION))
        span = self.n_bins - 1 - start
        if span > 0:
            k = np.arange(span + 1)
            weights[start:] = 0.5 * (1.0 + np.cos(np.pi * k / span))
        return weights

    def spectrum(self, w: Waveform) -> np.ndarray:
        if not math.isclose(w.dt, self.dt, rel_tol=1e-12):
            raise ParameterError(f"waveform dt {w.dt} does not match the grid dt {self.dt}")
        return damped_spectrum(w.head(self.n_samples), self.damping, self.n_fft).bins

    def waveform(self, bins: np.ndarray, onset: int = 0) -> Waveform:
        """Time-domain samples of ``bins``; samples ahead of ``onset`` are zeroed."""
        w = inverse_damped_spectrum(Spectrum(self.df, bins, self.damping), self.n_samples, self.taper)
        if onset <= 0:
            return w
        samples = w.samples.copy()
        samples[:onset] = 0.0
        return Waveform(w.dt, samples, w.t0)


@dataclass(frozen=True)
class FrequencySolution:
    """
    Node voltages of one injection pattern.

    Attributes:
        nodes (Tuple[str, ...]): Node order of the voltage array.
        s (np.ndarray): Laplace variable of every solved bin.
        voltages (np.ndarray): Complex voltages shaped (bins, nodes, phases).
        residual (float): Relative KCL residual of the worst bin.
    """
    nodes: Tuple[str, ...]
    s: np.ndarray
    voltages: np.ndarray
    residual: float

    def at(self, node: str) -> np.ndarray:
        return self.voltages[:, self.nodes.index(node), :]


def line_two_port(model: LineModel, length: float, s) -> np.ndarray:
    """
    Exact admittance matrix of a uniform line section.

    Args:
        model (LineModel): Scalar line model.
        length (float): Section length in meters.
        s: Laplace variable(s); pass ``1j * omega`` for a steady-state frequency.

    Returns:
        np.ndarray: Admittances shaped ``s.shape + (2, 2)``.

    Raises:
        ParameterError: Non-positive length.
        SingularFrequencyError: gamma * length vanishes or hits a lossless resonance.
    """
    if not length > 0:
        raise ParameterError(f"line length must be positive, got {length}")
    s = np.asarray(s, dtype=complex)
    x = model.propagation(s) * length
    if np.any(np.abs(x) < 1e-12):
        raise SingularFrequencyError("gamma * length vanishes; shift the Laplace axis with damping")
    z_c = model.surge_impedance(s)
    # exp(-x) form stays bounded for Re(x) >= 0
    decay = np.exp(-x)
    decay2 = decay * decay
    denominator = (1.0 - decay2) * z_c
    if np.any(np.abs(1.0 - decay2) < 1e-14):
        raise SingularFrequencyError("line section is at a lossless resonance")
    y11 = (1.0 + decay2) / denominator
    y12 = -2.0 * decay / denominator
    return np.stack([np.stack([y11, y12], axis=-1), np.stack([y12, y11], axis=-1)], axis=-2)


def modal_transform(n_phases: int) -> Tuple[np.ndarray, np.ndarray]:
    if n_phases == 1:
        return np.ones((1, 1)), np.ones((1, 1))
    return CLARKE_INVERSE, CLARKE


def fault_incidence(fault_type: FaultType, impedance: float, n_phases: int = 3) -> Tuple[np.ndarray, np.ndarray]:
    """
    Incidence matrix (phases x loops) and loop impedance matrix of a fault branch.

    3P is a star of three equal impedances to a floating node, written as two loops.
    """
    fault_type = FaultType(fault_type)
    if n_phases == 1:
        if fault_type is not FaultType.PG_A:
            raise UnsupportedConfigurationError(f"fault type {fault_type.value} needs a three-phase network")
        return np.ones((1, 1)), np.array([[impedance]], dtype=float)
    if fault_type.is_ground:
        incidence = np.zeros((3, 1))
        incidence['abc'.index(fault_type.value[-1]), 0] = 1.0
        return incidence, np.array([[impedance]], dtype=float)
    if fault_type is FaultType.THREE_PHASE:
        incidence = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
        return incidence, impedance * np.array([[2.0, 1.0], [1.0, 2.0]])
    first, second = ('abc'.index(letter) for letter in fault_type.value[-2:])
    incidence = np.zeros((3, 1))
    incidence[first, 0], incidence[second, 0] = 1.0, -1.0
    return incidence, np.array([[impedance]], dtype=float)


def excitation_pattern(fault_type: FaultType, n_phases: int = 3) -> np.ndarray:
    """Phase voltage pattern whose branch projection drives a GFL branch."""
    fault_type = FaultType(fault_type)
    if n_phases == 1:
        return np.ones(1)
    if fault_type is FaultType.THREE_PHASE:
        return np.array([1.0, -0.5, -0.5])
    # PG drives the faulted phase, PP the first phase of the pair
    driven = fault_type.value[-1] if fault_type.is_ground else fault_type.value[-2]
    pattern = np.zeros(3)
    pattern['abc'.index(driven)] = 1.0
    return pattern


def _segment_models(net: NetworkSpec, model_kind: Optional[ModelKind]) -> List[List[LineModel]]:
    cache: Dict[str, List[LineModel]] = {}
    models = []
    for segment in net.segments:
        kind = model_kind or segment.model_kind
        if kind not in cache:
            cache[kind] = network_modes(net.geometry, net.ground, kind)
        models.append(cache[kind])
    return models


def _shunt_admittances(net: NetworkSpec, index: Mapping[str, int]) -> np.ndarray:
    """Per-node admittance to ground of terminations and zeroed sources (identical in every mode)."""
    shunts = np.zeros(len(index))
    for termination in net.terminations:
        shunts[index[termination.node]] += 1.0 / termination.impedance
    for source in net.sources:
        shunts[index[source.node]] += 1.0 / source.impedance
    return shunts


def _stamp(matrix: np.ndarray, two_port: np.ndarray, i: int, j: int):
    matrix[:, i, i] += two_port[:, 0, 0]
    matrix[:, j, j] += two_port[:, 1, 1]
    matrix[:, i, j] += two_port[:, 0, 1]
    matrix[:, j, i] += two_port[:, 1, 0]


def _unique_modes(models: Sequence[LineModel]) -> Tuple[List[LineModel], List[int]]:
    unique: List[LineModel] = []
    mapping = []
    for model in models:
        for k, known in enumerate(unique):
            if known is model:
                mapping.append(k)
                break
        else:
            mapping.append(len(unique))
            unique.append(model)
    return unique, mapping


def _modal_matrices(net: NetworkSpec, s: np.ndarray, model_kind: Optional[ModelKind],
                    skip: Optional[str] = None) -> Tuple[List[np.ndarray], List[int]]:
    """Nodal admittance matrix of every distinct mode, shaped (bins, nodes, nodes)."""
    index = {node: k for k, node in enumerate(net.nodes)}
    shunts = _shunt_admittances(net, index)
    segment_models = _segment_models(net, model_kind)
    # modes share one object per segment when they are physically identical
    _, mapping = _unique_modes(segment_models[0])
    matrices = []
    for mode in sorted(set(mapping)):
        matrix = np.zeros((s.size, len(index), len(index)), dtype=complex)
        matrix[:, np.arange(len(index)), np.arange(len(index))] += shunts
        for segment, models in zip(net.segments, segment_models):
            if segment.id == skip:
                continue
            model = models[mapping.index(mode)]
            _stamp(matrix, line_two_port(model, segment.length, s), index[segment.from_node], index[segment.to_node])
        matrices.append(matrix)
    return matrices, mapping


def _batched_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        solution = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as e:
        raise TopologyError("nodal matrix is singular; check for isolated nodes") from e
    if not np.all(np.isfinite(solution)):
        raise TopologyError("nodal solution is not finite; check for isolated nodes")
    return solution


def source_phasors(net: NetworkSpec) -> Dict[str, np.ndarray]:
    """Open-circuit EMF phasors per source node (v(t) = |V| sin(wt + arg V))."""
    phasors: Dict[str, np.ndarray] = {}
    for source in net.sources:
        angles = math.radians(source.phase) + SHIFTS[:net.n_phases]
        phasors[source.node] = phasors.get(source.node, 0) + source.amplitude * np.exp(1j * angles)
    return phasors


def solve_frequency(net: NetworkSpec, s, injections: Optional[Mapping[str, Union[complex, Sequence[complex]]]] = None,
                    model_kind: Optional[ModelKind] = None) -> FrequencySolution:
    """
    Phase-domain nodal solution at one or more points of the Laplace axis.

    Sources enter as Norton equivalents (EMF / impedance behind their shunt
    impedance); fault branches of ``net.branches`` are stamped as admittances.

    Args:
        net (NetworkSpec): Network to solve.
        s: Laplace variable(s).
        injections: Extra current injection per node, scalar or one value per phase.
        model_kind (Optional[ModelKind]): Overrides every segment's line model.

    Returns:
        FrequencySolution: Node voltages and the KCL residual.

    Raises:
        TopologyError: Singular nodal matrix.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    n_nodes, n_phases = len(net.nodes), net.n_phases
    index = {node: k for k, node in enumerate(net.nodes)}
    t, t_inv = modal_transform(n_phases)

    modal, mapping = _modal_matrices(net, s, model_kind)
    size = n_nodes * n_phases
    matrix = np.zeros((s.size, size, size), dtype=complex)
    for mode, unique in enumerate(mapping):
        # node-major layout: row = node * n_phases + phase
        coupling = np.outer(t[:, mode], t_inv[mode, :])
        matrix += np.einsum('kij,ab->kiajb', modal[unique], coupling).reshape(s.size, size, size)

    for branch in net.branches:
        # a bolted branch is stamped as a very small resistance
        impedance = max(branch.impedance, MIN_BRANCH_IMPEDANCE)
        incidence, loop_impedance = fault_incidence(branch.fault_type, impedance, n_phases)
        block = incidence @ np.linalg.inv(loop_impedance) @ incidence.T
        k = index[branch.node] * n_phases
        matrix[:, k:k + n_phases, k:k + n_phases] += block

    currents = np.zeros((s.size, size), dtype=complex)
    sources = {source.node: source for source in net.sources}
    for node, emf in source_phasors(net).items():
        k = index[node] * n_phases
        currents[:, k:k + n_phases] += emf / sources[node].impedance
    for node, value in (injections or {}).items():
        if node not in index:
            raise ParameterError(f"injection at unknown node '{node}'")
        k = index[node] * n_phases
        currents[:, k:k + n_phases] += np.broadcast_to(np.asarray(value, dtype=complex), (n_phases,))

    if not np.any(currents):
        voltages = np.zeros((s.size, n_nodes, n_phases), dtype=complex)
        return FrequencySolution(tuple(net.nodes), s, voltages, 0.0)

    solution = _batched_solve(matrix, currents[..., None])[..., 0]
    residual = np.linalg.norm(np.einsum('kij,kj->ki', matrix, solution) - currents, axis=1)
    scale = np.maximum(np.linalg.norm(currents, axis=1), np.finfo(float).tiny)
    return FrequencySolution(nodes=tuple(net.nodes),
                             s=s,
                             voltages=solution.reshape(s.size, n_nodes, n_phases),
                             residual=float(np.max(residual / scale)))


def prefault_phasor(net: NetworkSpec, f_power: float = POWER_FREQUENCY,
                    model_kind: Optional[ModelKind] = None) -> Dict[str, np.ndarray]:
    """Steady-state phase voltage phasors of every node at the power frequency."""
    if not net.sources:
        raise ParameterError("pre-fault solution needs at least one source")
    solution = solve_frequency(net, 2j * np.pi * f_power, model_kind=model_kind)
    return {node: solution.voltages[0, k, :] for k, node in enumerate(solution.nodes)}


class SegmentKernel:
    """
    Reduced network seen by branches inserted along one segment.

    The rest of the network (everything but the segment) is Kron-reduced per
    mode onto the segment ends and the observation nodes, so a branch at any
    position only needs a small dense solve per bin.
    """

    def __init__(self, net: NetworkSpec, segment_id: str, grid: SolveGrid,
                 observe: Sequence[str] = (), model_kind: Optional[ModelKind] = None):
        self.net = net
        self.grid = grid
        self.segment = net.segment(segment_id)
        observe = tuple(observe) or (net.measurement,)
        for node in observe:
            if node not in net.nodes:
                raise ParameterError(f"observation node '{node}' is not part of the network")
        self.observe = observe
        self.boundary = list(dict.fromkeys((self.segment.from_node, self.segment.to_node) + observe))
        self.t, self.t_inv = modal_transform(net.n_phases)
        self.distances = {node: node_distances(net, node) for node in observe}

        s = grid.s
        segment_models = _segment_models(net, model_kind)
        self.models, self.mapping = _unique_modes(segment_models[net.segment_index(segment_id)])
        modal, _ = _modal_matrices(net, s, model_kind, skip=segment_id)
        index = {node: k for k, node in enumerate(net.nodes)}
        b = [index[node] for node in self.boundary]
        interior = [k for k in range(len(net.nodes)) if k not in b]
        self.reduced = []
        for matrix in modal:
            y_bb = matrix[:, b][:, :, b]
            if interior:
                y_bi = matrix[:, b][:, :, interior]
                y_ib = matrix[:, interior][:, :, b]
                y_ii = matrix[:, interior][:, :, interior]
                y_bb = y_bb - y_bi @ _batched_solve(y_ii, y_ib)
            self.reduced.append(y_bb)

    def onset(self, position: float) -> List[int]:
        """First sample per observed node a wave launched at ``position`` can reach, less a guard."""
        starts = []
        for node in self.observe:
            distance = distance_from_measurement(self.net, self.segment.id, position, self.distances[node])
            starts.append(max(int(math.floor(distance / SPEED_OF_LIGHT / self.grid.dt)) - CAUSAL_GUARD, 0))
        return starts

    def transfer(self, position: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Modal driving-point and transfer impedances of a branch node at ``position``.

        Returns:
            Tuple[np.ndarray, np.ndarray]: z_ff shaped (modes, bins) and z_of shaped
            (observed nodes, modes, bins).
        """
        length = self.segment.length
        if position < -POSITION_TOLERANCE or position > length + POSITION_TOLERANCE:
            raise ParameterError(f"position {position} m is outside segment '{self.segment.id}'")
        s = self.grid.s
        n_b = len(self.boundary)
        z_ff, z_of = [], []
        for model, reduced in zip(self.models, self.reduced):
            if position <= POSITION_TOLERANCE or position >= length - POSITION_TOLERANCE:
                matrix = reduced.copy()
                _stamp(matrix, line_two_port(model, length, s), 0, 1)
                fault = 0 if position <= POSITION_TOLERANCE else 1
            else:
                matrix = np.zeros((s.size, n_b + 1, n_b + 1), dtype=complex)
                matrix[:, :n_b, :n_b] = reduced
                fault = n_b
                _stamp(matrix, line_two_port(model, position, s), 0, fault)
                _stamp(matrix, line_two_port(model, length - position, s), fault, 1)
            rhs = np.zeros((s.size, matrix.shape[1], 1), dtype=complex)
            rhs[:, fault, 0] = 1.0
            v = _batched_solve(matrix, rhs)[..., 0]
            z_ff.append(v[:, fault])
            z_of.append(np.stack([v[:, self.boundary.index(node)] for node in self.observe]))
        z_ff = np.stack([z_ff[k] for k in self.mapping])
        z_of = np.stack([z_of[k] for k in self.mapping], axis=1)
        return z_ff, z_of

    def respond(self, transfer: Tuple[np.ndarray, np.ndarray], fault_type: FaultType,
                impedance: float, branch_sources: np.ndarray) -> np.ndarray:
        """
        Observation-node phase voltage spectra for a branch driven by series sources.

        Args:
            transfer: Output of :meth:`transfer`.
            fault_type (FaultType): Branch topology.
            impedance (float): Branch impedance in ohms.
            branch_sources (np.ndarray): Series EMF spectra per loop, shaped (loops, bins).

        Returns:
            np.ndarray: Spectra shaped (observed nodes, phases, bins).
        """
        z_ff, z_of = transfer
        incidence, loop_impedance = fault_incidence(fault_type, impedance, self.net.n_phases)
        t, t_inv = self.t, self.t_inv
        z_phase = np.einsum('am,mk,mb->kab', t, z_ff, t_inv)
        loop_matrix = loop_impedance + np.einsum('ap,kab,bq->kpq', incidence, z_phase, incidence)
        currents = _batched_solve(loop_matrix, branch_sources.T[..., None])[..., 0]
        injected = currents @ incidence.T
        return np.einsum('am,omk,mb,kb->oak', t, z_of, t_inv, injected)


def _phase_triple(grid: SolveGrid, spectra: np.ndarray, onset: int = 0) -> PhaseTriple:
    rows = [grid.waveform(spectra[k], onset).samples for k in range(spectra.shape[0])]
    while len(rows) < 3:
        rows.append(np.zeros(grid.n_samples))
    return PhaseTriple.from_array(grid.dt, np.vstack(rows))


def inception_time(reference: complex, angle: float, f_power: float) -> float:
    """Earliest t >= 0 with omega*t + arg(reference) equal to the inception angle (mod 2*pi)."""
    omega = 2 * np.pi * f_power
    return ((math.radians(angle) - np.angle(reference)) % (2 * np.pi)) / omega


def reference_phasor(fault_type: FaultType, phasors: np.ndarray) -> complex:
    fault_type = FaultType(fault_type)
    if phasors.size == 1:
        return complex(phasors[0])
    if fault_type is FaultType.THREE_PHASE:
        return complex(phasors[0])
    if fault_type.is_ground:
        return complex(phasors['abc'.index(fault_type.value[-1])])
    first, second = ('abc'.index(letter) for letter in fault_type.value[-2:])
    return complex(phasors[first] - phasors[second])


def prefault_waveforms(phasors: np.ndarray, t_inception: float, f_power: float, grid: SolveGrid) -> np.ndarray:
    """Pre-fault phase voltages from the inception instant on, shaped (phases, samples)."""
    tau = grid.dt * np.arange(grid.n_samples)
    omega = 2 * np.pi * f_power
    return np.abs(phasors)[:, None] * np.sin(omega * (t_inception + tau)[None, :] + np.angle(phasors)[:, None])


def simulate_fault_at(net: NetworkSpec, fault: FaultSpec, grid: SolveGrid, nodes: Sequence[str] = (),
                      model_kind: Optional[ModelKind] = None,
                      f_power: Optional[float] = None) -> Dict[str, PhaseTriple]:
    """
    Fault-generated transients (superimposed component) at one or more nodes.

    The dead network (sources shorted behind their impedances) is driven by a
    series source equal to minus the pre-fault voltage across the fault branch,
    switched at the instant given by the inception angle.

    Args:
        net (NetworkSpec): Healthy network with at least one source.
        fault (FaultSpec): Fault location, type, impedance and inception angle.
        grid (SolveGrid): Sampling grid.
        nodes (Sequence[str]): Observation nodes; the measurement node when empty.
        model_kind (Optional[ModelKind]): Overrides every segment's line model.
        f_power (Optional[float]): Power frequency; the first source's frequency when omitted.

    Returns:
        Dict[str, PhaseTriple]: Phase voltages per observation node.
    """
    healthy, fault_node = insert_branch(net, (fault.segment, fault.position), None)
    fault_type = FaultType(fault.fault_type)
    incidence, _ = fault_incidence(fault_type, fault.impedance, net.n_phases)
    if not net.sources:
        raise ParameterError("fault simulation needs at least one source for the pre-fault state")
    f_power = f_power or net.sources[0].frequency

    phasors = prefault_phasor(healthy, f_power, model_kind)[fault_node]
    t_inception = inception_time(reference_phasor(fault_type, phasors), fault.inception_angle, f_power)
    logger.debug("fault %s at %s:%.1f m switches %.3f ms into the cycle",
                 fault_type.value, fault.segment, fault.position, t_inception * 1e3)

    prefault = prefault_waveforms(phasors, t_inception, f_power, grid)
    branch_waveforms = -incidence.T @ prefault
    branch_sources = np.vstack([grid.spectrum(Waveform(grid.dt, row)) for row in branch_waveforms])

    observe = tuple(nodes) or (net.measurement,)
    kernel = SegmentKernel(net, fault.segment, grid, observe, model_kind)
    spectra = kernel.respond(kernel.transfer(fault.position), fault_type, fault.impedance, branch_sources)
    onsets = kernel.onset(fault.position)
    return {node: _phase_triple(grid, spectra[k], onsets[k]) for k, node in enumerate(observe)}


def simulate_fault(net: NetworkSpec, fault: FaultSpec, grid: SolveGrid,
                   model_kind: Optional[ModelKind] = None) -> PhaseTriple:
    return simulate_fault_at(net, fault, grid, (net.measurement,), model_kind)[net.measurement]


def gfl_branch_sources(fault_type: FaultType, excitation_bins: np.ndarray, n_phases: int) -> np.ndarray:
    incidence, _ = fault_incidence(fault_type, 1.0, n_phases)
    return np.outer(incidence.T @ excitation_pattern(fault_type, n_phases), excitation_bins)


def simulate_gfl_excitation(net: NetworkSpec, gfl: Tuple[str, float], fault_type: FaultType,
                            excitation: Waveform, grid: SolveGrid, impedance: Optional[float] = None,
                            model_kind: Optional[ModelKind] = None) -> PhaseTriple:
    """
    Measurement-node response to an excitation source in series with a GFL branch.

    Main sources are zeroed behind their impedances; the branch impedance
    defaults to the configured GFL resistance.
    """
    impedance = GFL_RESISTANCE if impedance is None else impedance
    segment_id, position = gfl
    validate_position(net, segment_id, position)
    kernel = SegmentKernel(net, segment_id, grid, (net.measurement,), model_kind)
    sources = gfl_branch_sources(fault_type, grid.spectrum(excitation), net.n_phases)
    spectra = kernel.respond(kernel.transfer(position), fault_type, impedance, sources)
    return _phase_triple(grid, spectra[0], kernel.onset(position)[0])
