"""
Convolution-energy fault location.

Pre-calculation stores the measurement-node response of every GFL; location
convolves the measured transient with each stored record and picks the GFL
with the largest convoluted signal energy (CSE).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple
import logging
import time

import numpy as np
from scipy import fft as sp_fft

from app.config import (EMTC_WORKERS,
                        GFL_RESISTANCE,
                        GROUND_THRESHOLD,
                        NOISE_FLOOR,
                        PAIR_BALANCE,
                        PHASE_THRESHOLD,
                        QUIET_PHASE
                        )
from app.core.fdsolver import SegmentKernel, SolveGrid, gfl_branch_sources, fault_incidence
from app.core.network import canonical_rotation, enumerate_gfls, network_digest, node_distances
from app.core.signal import PhaseTriple, Waveform, clarke_forward, next_pow2, signal_energy
from app.database.gfl_db import GflDatabase, build_records, segment_table
from app.database.schemas import FaultType, ModeName, ModelKind, NetworkSpec
from app.utils.errors import (CompatibilityError,
                              DetectionFailureError,
                              DigestMismatchError,
                              EmtcError,
                              ParameterError
                              )

logger = logging.getLogger(__name__)

CANONICAL_TYPES = (FaultType.PG_A, FaultType.PP_BC, FaultType.THREE_PHASE)
RANKING_CHUNK = 256
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FaultTypeVerdict:
    """
    Outcome of fault-type recognition.

    Attributes:
        fault_type (Optional[FaultType]): Recognized type; None when no fault is seen or the pattern is ambiguous.
        phase_scores (Tuple[float, float, float]): Per-phase energy relative to the strongest phase.
        ground_score (float): Ground-mode energy relative to the aerial-mode energy, clipped to 1.
        detected (bool): Whether any phase rises above the noise floor.
    """
    fault_type: Optional[FaultType]
    phase_scores: Tuple[float, float, float]
    ground_score: float
    detected: bool = True


@dataclass(frozen=True)
class CurveEntry:
    segment: str
    position: float
    energy: float


@dataclass(frozen=True)
class LocationResult:
    segment: str
    position: float
    curve: Tuple[CurveEntry, ...] = field(repr=False)
    fault_type: Optional[FaultType]
    mode: ModeName
    runtime: float
    verdict: Optional[FaultTypeVerdict] = None


def raw_signal(phases: PhaseTriple, fault_type: FaultType) -> Waveform:
    """Phase-domain signal the naive variant convolves: faulted phase, pair difference, or phase a."""
    fault_type = FaultType(fault_type)
    if fault_type.is_ground:
        return phases.phase(fault_type.value[-1])
    if fault_type is FaultType.THREE_PHASE:
        return phases.a
    first, second = fault_type.value[-2:]
    return Waveform(phases.dt, phases.phase(first).samples - phases.phase(second).samples, phases.a.t0)


def precalculate(net: NetworkSpec,
                 spacing: float,
                 excitation: Waveform,
                 fault_types: Sequence[FaultType],
                 grid: SolveGrid,
                 excitation_label: str = 'custom',
                 model_kind: Optional[ModelKind] = None,
                 workers: int = EMTC_WORKERS) -> GflDatabase:
    """
    Builds the GFL database of a network.

    Args:
        net (NetworkSpec): Network to pre-calculate.
        spacing (float): GFL spacing in meters.
        excitation (Waveform): Energy-bounded excitation in series with every GFL branch.
        fault_types (Sequence[FaultType]): Branch types to store.
        grid (SolveGrid): Sampling grid; its dt is stored in the header.
        excitation_label (str): Excitation descriptor written to the header.
        model_kind (Optional[ModelKind]): Overrides every segment's line model.
        workers (int): Threads solving GFLs of a segment in parallel.

    Returns:
        GflDatabase: Records ordered by GFL, then fault type, then mode.
    """
    if not fault_types:
        raise ParameterError("at least one fault type is needed")
    fault_types = [FaultType(fault_type) for fault_type in dict.fromkeys(fault_types)]
    for fault_type in fault_types:
        fault_incidence(fault_type, GFL_RESISTANCE, net.n_phases)
    if not signal_energy(excitation) > 0:
        raise ParameterError("excitation carries no energy")

    gfls = enumerate_gfls(net, spacing)
    excitation_bins = grid.spectrum(excitation)
    sources = {fault_type: gfl_branch_sources(fault_type, excitation_bins, net.n_phases)
               for fault_type in fault_types}
    started = time.perf_counter()
    rows = []
    for segment in net.segments:
        positions = gfls.positions(segment.id)
        if not positions:
            continue
        kernel = SegmentKernel(net, segment.id, grid, (net.measurement,), model_kind)
        index = net.segment_index(segment.id)

        def solve(position: float):
            try:
                transfer = kernel.transfer(position)
                onset = kernel.onset(position)[0]
                return [(fault_type, onset,
                         kernel.respond(transfer, fault_type, GFL_RESISTANCE, sources[fault_type])[0])
                        for fault_type in fault_types]
            except EmtcError:
                logger.error("pre-calculation failed at GFL %s:%.3f m", segment.id, position)
                raise

        with ThreadPoolExecutor(max_workers=max(workers, 1)) as executor:
            for position, responses in zip(positions, executor.map(solve, positions)):
                for fault_type, onset, spectra in responses:
                    rows.extend((index, position, fault_type, mode, samples)
                                for mode, samples in _stored_modes(grid, spectra, fault_type, net.n_phases, onset))
        logger.info("segment %s: %d GFLs pre-calculated", segment.id, len(positions))

    records = build_records(grid.n_samples, rows)
    logger.info("pre-calculated %d records in %.1f s", len(records), time.perf_counter() - started)
    return GflDatabase(digest=network_digest(net),
                       dt=grid.dt,
                       n_samples=grid.n_samples,
                       spacing=spacing,
                       excitation=excitation_label,
                       segments=segment_table(net, node_distances(net)),
                       records=records)


def _stored_modes(grid: SolveGrid, spectra: np.ndarray, fault_type: FaultType,
                  n_phases: int, onset: int = 0) -> Iterable[Tuple[ModeName, np.ndarray]]:
    waveforms = [grid.waveform(spectra[k], onset).samples for k in range(spectra.shape[0])]
    if n_phases == 1:
        # a single wire has no modes besides itself
        yield ModeName.RAW, waveforms[0]
        return
    phases = PhaseTriple.from_array(grid.dt, np.vstack(waveforms))
    modal = clarke_forward(phases)
    yield ModeName.MODE0, modal.mode0.samples
    yield ModeName.ALPHA, modal.alpha.samples
    yield ModeName.BETA, modal.beta.samples
    yield ModeName.RAW, raw_signal(phases, fault_type).samples


def classify_fault(measured: PhaseTriple,
                   ground_threshold: float = GROUND_THRESHOLD,
                   phase_threshold: float = PHASE_THRESHOLD,
                   noise_floor: float = NOISE_FLOOR) -> FaultTypeVerdict:
    """
    Recognizes the fault type from per-phase and ground-mode energies.

    PG needs a ground-mode share above ``ground_threshold``. PP needs two
    involved phases of opposite polarity and comparable energy while the third
    phase stays below ``QUIET_PHASE``. Any other ground-free pattern is 3P.
    """
    phases = measured.as_array()
    energies = np.array([signal_energy(measured.a), signal_energy(measured.b), signal_energy(measured.c)])
    if energies.max() < noise_floor:
        return FaultTypeVerdict(None, (0.0, 0.0, 0.0), 0.0, detected=False)

    scores = energies / energies.max()
    modal = clarke_forward(measured)
    aerial = signal_energy(modal.alpha) + signal_energy(modal.beta)
    ground = signal_energy(modal.mode0)
    ground_score = 1.0 if aerial <= 0 else float(min(ground / aerial, 1.0))
    phase_scores = tuple(float(score) for score in scores)

    if ground_score > ground_threshold:
        faulted = 'abc'[int(np.argmax(energies))]
        return FaultTypeVerdict(FaultType(f"PG-{faulted}"), phase_scores, ground_score)

    involved = [k for k in range(3) if scores[k] >= phase_threshold]
    quiet = all(scores[k] < QUIET_PHASE for k in range(3) if k not in involved)
    if len(involved) == 2 and quiet:
        first, second = involved
        opposite = float(np.dot(phases[first], phases[second])) < 0
        balance = min(energies[first], energies[second]) / max(energies[first], energies[second])
        if opposite and balance >= PAIR_BALANCE:
            pair = {(0, 1): 'ab', (1, 2): 'bc', (0, 2): 'ca'}[(first, second)]
            return FaultTypeVerdict(FaultType(f"PP-{pair}"), phase_scores, ground_score)
        logger.warning("two phases involved without a clean phase-to-phase signature (balance %.2f)", balance)
        return FaultTypeVerdict(None, phase_scores, ground_score)
    return FaultTypeVerdict(FaultType.THREE_PHASE, phase_scores, ground_score)


def check_compatibility(db: GflDatabase, dt: float, digest: Optional[int] = None):
    """
    Raises:
        CompatibilityError: Sampling steps differ.
        DigestMismatchError: The measurement comes from another network.
    """
    if not np.isclose(dt, db.dt, rtol=1e-9, atol=0.0):
        raise CompatibilityError(f"time step mismatch: database {db.dt:g} s, measurement {dt:g} s")
    if digest is not None and digest != db.digest:
        raise DigestMismatchError(db.digest, digest)


def convolution_energies(records: np.ndarray, measured: np.ndarray, dt: float,
                         workers: int = EMTC_WORKERS) -> np.ndarray:
    """
    Energy of dt * (record * measured) for every record row, through Parseval.

    Args:
        records (np.ndarray): Stored transients shaped (records, samples).
        measured (np.ndarray): Measured transient.
        dt (float): Common time step.
        workers (int): FFT worker threads.

    Returns:
        np.ndarray: One energy per record.
    """
    records = np.atleast_2d(records)
    n_fft = next_pow2(records.shape[1] + measured.size - 1)
    measured_power = np.abs(sp_fft.rfft(measured, n_fft)) ** 2
    # one-sided spectrum: interior bins stand for two conjugate bins
    weights = np.full(measured_power.size, 2.0)
    weights[0] = 1.0
    weights[-1] = 1.0
    kernel = weights * measured_power
    energies = np.empty(records.shape[0])
    for start in range(0, records.shape[0], RANKING_CHUNK):
        chunk = sp_fft.rfft(records[start:start + RANKING_CHUNK], n_fft, axis=-1, workers=max(workers, 1))
        energies[start:start + RANKING_CHUNK] = (np.abs(chunk) ** 2) @ kernel
    return energies * dt ** 3 / n_fft


@dataclass(frozen=True)
class _Ranking:
    best: int
    peak: float
    curve: np.ndarray
    records: np.ndarray
    mode: ModeName


def _rank(db: GflDatabase, records: np.ndarray, measured: Waveform, mode: ModeName, workers: int) -> _Ranking:
    energies = convolution_energies(records['samples'], measured.samples, db.dt, workers)
    peak = float(energies.max())
    if not peak > 0:
        raise DetectionFailureError("measured transient carries no energy against the database")
    tied = np.flatnonzero(energies >= peak * (1.0 - TIE_TOLERANCE))
    # equal energies resolve toward the measurement node
    best = min(tied, key=lambda k: (db.distance(int(records['segment'][k]), float(records['position'][k])), k))
    # only the chosen record holds 1; tied records sit just below it
    curve = np.minimum(energies / energies[best], np.nextafter(1.0, 0.0))
    curve[best] = 1.0
    return _Ranking(int(best), peak, curve, records, mode)


def _lookup(db: GflDatabase, fault_type: FaultType, mode: ModeName) -> Tuple[FaultType, int]:
    """Fault type actually stored for ``fault_type`` and the phase shift reaching it."""
    if db.has(fault_type, mode):
        return fault_type, 0
    canonical, shift = canonical_rotation(fault_type)
    if db.has(canonical, mode):
        return canonical, shift
    raise CompatibilityError(f"database holds no {ModeName(mode).value} records for fault type {fault_type.value}")


def _result(db: GflDatabase, ranking: _Ranking, fault_type: FaultType, started: float,
            verdict: Optional[FaultTypeVerdict] = None) -> LocationResult:
    records = ranking.records
    entries = tuple(CurveEntry(db.segment_id(int(segment)), float(position), float(energy))
                    for segment, position, energy in zip(records['segment'], records['position'], ranking.curve))
    return LocationResult(segment=db.segment_id(int(records['segment'][ranking.best])),
                          position=float(records['position'][ranking.best]),
                          curve=entries,
                          fault_type=fault_type,
                          mode=ranking.mode,
                          runtime=time.perf_counter() - started,
                          verdict=verdict)


def _rank_raw(db: GflDatabase, measured: PhaseTriple, fault_type: FaultType, workers: int) -> _Ranking:
    stored, shift = _lookup(db, fault_type, ModeName.RAW)
    signal = raw_signal(measured.rotated(shift), stored)
    return _rank(db, db.select(stored, ModeName.RAW), signal, ModeName.RAW, workers)


def locate_naive(db: GflDatabase, measured: PhaseTriple, fault_type: FaultType,
                 digest: Optional[int] = None, workers: int = EMTC_WORKERS) -> LocationResult:
    """Locates with phase-domain signals (faulted phase or pair difference)."""
    started = time.perf_counter()
    check_compatibility(db, measured.dt, digest)
    fault_type = FaultType(fault_type)
    return _result(db, _rank_raw(db, measured, fault_type, workers), fault_type, started)


def _rank_aerial(db: GflDatabase, measured: PhaseTriple, fault_type: FaultType,
                 aerial_mode: Optional[ModeName], workers: int) -> _Ranking:
    if not any(db.has(stored, ModeName.ALPHA) for stored in db.fault_types):
        logger.info("database holds single-wire records; using the phase signal")
        return _rank_raw(db, measured, fault_type, workers)

    stored, shift = _lookup(db, fault_type, ModeName.ALPHA)
    modal = clarke_forward(measured.rotated(shift))
    mode = aerial_mode
    if mode is None:
        mode = ModeName.ALPHA if signal_energy(modal.alpha) >= signal_energy(modal.beta) else ModeName.BETA
    mode = ModeName(mode)
    if mode not in (ModeName.ALPHA, ModeName.BETA):
        raise ParameterError(f"aerial location needs the alpha or beta mode, got {mode.value}")
    return _rank(db, db.select(stored, mode), modal.mode(mode.value), mode, workers)


def locate_aerial(db: GflDatabase, measured: PhaseTriple, aerial_mode: Optional[ModeName] = None,
                  fault_type: Optional[FaultType] = None, digest: Optional[int] = None,
                  workers: int = EMTC_WORKERS) -> LocationResult:
    """
    Classifies the fault, then locates with the stronger aerial mode.

    An ambiguous classification tries every stored fault type and keeps the
    global maximum; ``fault_type`` skips classification altogether.
    """
    started = time.perf_counter()
    check_compatibility(db, measured.dt, digest)
    verdict = None
    if fault_type is None:
        verdict = classify_fault(measured)
        if not verdict.detected:
            raise DetectionFailureError("no fault transient above the noise floor")
        fault_type = verdict.fault_type

    if fault_type is not None:
        fault_type = FaultType(fault_type)
        return _result(db, _rank_aerial(db, measured, fault_type, aerial_mode, workers), fault_type, started, verdict)

    logger.warning("fault type is ambiguous; trying every stored fault type")
    candidates = [stored for stored in CANONICAL_TYPES if stored in db.fault_types] or db.fault_types
    rankings = [(_rank_aerial(db, measured, candidate, aerial_mode, workers), candidate) for candidate in candidates]
    ranking, candidate = max(rankings, key=lambda outcome: outcome[0].peak)
    return _result(db, ranking, candidate, started, verdict)


def locate(db: GflDatabase, measured: PhaseTriple, mode: str = 'aerial', fault_type: Optional[FaultType] = None,
           aerial_mode: Optional[ModeName] = None, digest: Optional[int] = None,
           workers: int = EMTC_WORKERS) -> LocationResult:
    if mode == 'aerial':
        return locate_aerial(db, measured, aerial_mode, fault_type, digest, workers)
    if mode != 'naive':
        raise ParameterError(f"unknown location mode '{mode}', expected naive or aerial")
    started = time.perf_counter()
    check_compatibility(db, measured.dt, digest)
    verdict = None
    if fault_type is None:
        verdict = classify_fault(measured)
        if verdict.fault_type is None:
            raise DetectionFailureError("fault type is not recognizable; pass it explicitly")
        fault_type = verdict.fault_type
    fault_type = FaultType(fault_type)
    return _result(db, _rank_raw(db, measured, fault_type, workers), fault_type, started, verdict)


def cse_curve(result: LocationResult) -> List[Tuple[str, float, float]]:
    """Normalized CSE per GFL as (segment, position, energy); the maximum is exactly 1."""
    return [(entry.segment, entry.position, entry.energy) for entry in result.curve]
