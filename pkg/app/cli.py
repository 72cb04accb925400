"""
Command-line entry point: precalc, simulate, locate, sweep and analyze.

Quantity flags carry explicit unit suffixes (``40km``, ``0.1us``, ``10ohm``);
exit codes are 0 on success, 2 for usage errors, 3 for compatibility errors
and 4 for numerical failures.
"""
from functools import wraps
from typing import List, Optional, Tuple
import logging
import math
import os
import time

import numpy as np
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from app.config import DEFAULT_DT, DEFAULT_DURATION, EMTC_LOG_LEVEL, EMTC_WORKERS
from app.core.analysis import (build_error_model,
                               energy_ratio,
                               fundamental_frequency,
                               terminal_reflection,
                               transfer_maxima
                               )
from app.core.baseline_tdoa import (detect_arrivals,
                                    diff_smoother,
                                    prefault_rms,
                                    tdoa_classic,
                                    tdoa_setting_free,
                                    tdoa_signal
                                    )
from app.core.fdsolver import SolveGrid, simulate_fault_at
from app.core.linemodel import fit_log_velocity, network_modes, velocity_curve
from app.core.locator import CANONICAL_TYPES, locate, precalculate
from app.core.network import (canonical_rotation,
                              distance_from_measurement,
                              load_network,
                              network_digest,
                              node_distances,
                              with_ground
                              )
from app.database.crud import (crud_read_measurement,
                               crud_read_scenario_matrix,
                               crud_write_curve,
                               crud_write_measurement,
                               crud_write_result,
                               crud_write_table,
                               envelope_digest,
                               envelope_to_phases,
                               location_response,
                               phases_to_envelope
                               )
from app.database.gfl_db import GflDatabase
from app.database.schemas import (EnvelopeMetadata,
                                  FaultSpec,
                                  FaultType,
                                  ModeName,
                                  NetworkSpec,
                                  ScenarioMatrix
                                  )
from app.utils.errors import EmtcError, ParameterError
from app.utils.functions import build_excitation, parse_excitation, parse_quantity, split_list

logger = logging.getLogger('emtc')
console = Console()

app = typer.Typer(help="Convolution-energy fault location on transmission networks.", add_completion=False)
analyze_app = typer.Typer(help="Velocity, error-model and energy-ratio tables.")
app.add_typer(analyze_app, name='analyze')


def configure_logging(level: str = EMTC_LOG_LEVEL):
    logging.basicConfig(level=level.upper(),
                        format="%(message)s",
                        datefmt="[%X]",
                        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
                        force=True)


@app.callback()
def main(log_level: str = typer.Option(EMTC_LOG_LEVEL, '--log-level', help="Logging level.")):
    configure_logging(log_level)


def handle_errors(command):
    """Turns toolkit errors into a diagnostic and the matching exit code."""

    @wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except EmtcError as e:
            console.print(f"[bold red]error:[/bold red] {e}")
            raise typer.Exit(code=e.exit_code)
        except ValidationError as e:
            details = '; '.join(error['msg'] for error in e.errors())
            console.print(f"[bold red]error:[/bold red] invalid input: {details}")
            raise typer.Exit(code=2)
        except ValueError as e:
            console.print(f"[bold red]error:[/bold red] {e}")
            raise typer.Exit(code=2)

    return wrapper


def build_grid(dt: str, duration: str, min_fft: Optional[int]) -> SolveGrid:
    return SolveGrid.build(parse_quantity(dt, 'time'), parse_quantity(duration, 'time'), min_fft)


def default_fault_types(net: NetworkSpec) -> List[FaultType]:
    return [FaultType.PG_A] if net.n_phases == 1 else list(CANONICAL_TYPES)


def parse_fault_types(text: Optional[str], net: NetworkSpec) -> List[FaultType]:
    if not text:
        return default_fault_types(net)
    try:
        return [FaultType(item) for item in split_list(text)]
    except ValueError as e:
        raise ParameterError(f"unknown fault type in '{text}': {e}") from e


def parse_model_kind(text: Optional[str]) -> Optional[str]:
    if text is None:
        return None
    if text not in ('constant', 'frequency_dependent'):
        raise ParameterError(f"model kind must be constant or frequency_dependent, got '{text}'")
    return text


@app.command()
@handle_errors
def precalc(network: str = typer.Argument(..., help="Network config JSON."),
            out: str = typer.Option(..., '--out', help="GFL database to write."),
            spacing: str = typer.Option('10m', help="GFL spacing."),
            excitation: str = typer.Option('lightning', help="Excitation, e.g. lightning or rect:width=1e-6."),
            types: Optional[str] = typer.Option(None, help="Comma-separated fault types to store."),
            dt: str = typer.Option(f"{DEFAULT_DT:g}s", help="Time step."),
            duration: str = typer.Option(f"{DEFAULT_DURATION:g}s", help="Record length."),
            min_fft: Optional[int] = typer.Option(None, help="Minimum transform length."),
            model_kind: Optional[str] = typer.Option(None, help="Override every segment's line model."),
            workers: int = typer.Option(EMTC_WORKERS, help="Worker threads.")):
    """Pre-calculates the GFL database of a network."""
    net = load_network(network)
    descriptor = parse_excitation(excitation)
    grid = build_grid(dt, duration, min_fft)
    started = time.perf_counter()
    db = precalculate(net,
                      parse_quantity(spacing, 'length'),
                      build_excitation(descriptor, grid.dt, grid.duration),
                      parse_fault_types(types, net),
                      grid,
                      excitation_label=descriptor.label(),
                      model_kind=parse_model_kind(model_kind),
                      workers=workers)
    db.write(out)
    console.print(f"{len(db)} records written to {out} in {time.perf_counter() - started:.1f} s")


@app.command()
@handle_errors
def simulate(network: str = typer.Argument(..., help="Network config JSON."),
             out: str = typer.Option(..., '--out', help="Measurement file (.json or .csv)."),
             fault_type: FaultType = typer.Option(FaultType.PG_A, '--type', help="Fault type."),
             segment: str = typer.Option(..., help="Faulted segment id."),
             position: str = typer.Option(..., help="Fault distance from the segment's from-node."),
             angle: str = typer.Option('90deg', help="Inception angle."),
             impedance: str = typer.Option('10ohm', help="Fault impedance."),
             rho: Optional[str] = typer.Option(None, help="Ground resistivity override, e.g. 1000ohmm."),
             node: Optional[str] = typer.Option(None, help="Observation node; the measurement node by default."),
             model_kind: Optional[str] = typer.Option(None, help="Override every segment's line model."),
             dt: str = typer.Option(f"{DEFAULT_DT:g}s", help="Time step."),
             duration: str = typer.Option(f"{DEFAULT_DURATION:g}s", help="Record length."),
             min_fft: Optional[int] = typer.Option(None, help="Minimum transform length.")):
    """Simulates the fault-generated transient at one node."""
    net = load_network(network)
    digest = network_digest(net)
    if rho is not None:
        net = with_ground(net, parse_quantity(rho, 'resistivity'))
    fault = FaultSpec(segment=segment,
                      position=parse_quantity(position, 'length'),
                      fault_type=fault_type,
                      impedance=parse_quantity(impedance, 'impedance'),
                      inception_angle=parse_quantity(angle, 'angle'))
    observe = node or net.measurement
    kind = parse_model_kind(model_kind)
    phases = simulate_fault_at(net, fault, build_grid(dt, duration, min_fft), (observe,), kind)[observe]
    metadata = EnvelopeMetadata(network_digest=f"{digest:016x}",
                                truth=fault,
                                ground_resistivity=net.ground.resistivity,
                                model_kind=kind,
                                node=observe)
    crud_write_measurement(out, phases_to_envelope(phases, metadata))
    console.print(f"{len(phases)} samples per phase written to {out}")


@app.command(name='locate')
@handle_errors
def locate_command(database: str = typer.Argument(..., help="GFL database."),
                   measurement: str = typer.Argument(..., help="Measurement file (.json or .csv)."),
                   mode: str = typer.Option('aerial', help="naive or aerial."),
                   fault_type: Optional[FaultType] = typer.Option(None, '--type', help="Skip fault-type recognition."),
                   aerial_mode: Optional[ModeName] = typer.Option(None, help="Force the alpha or beta mode."),
                   network: Optional[str] = typer.Option(None, help="Network config whose digest the database must match."),
                   out: Optional[str] = typer.Option(None, '--out', help="Result JSON."),
                   curve: Optional[str] = typer.Option(None, '--curve', help="Normalized CSE curve CSV."),
                   workers: int = typer.Option(EMTC_WORKERS, help="FFT worker threads.")):
    """Locates a fault from a measured transient and a GFL database."""
    db = GflDatabase.read(database)
    envelope = crud_read_measurement(measurement)
    digest = network_digest(load_network(network)) if network else envelope_digest(envelope)
    result = locate(db, envelope_to_phases(envelope), mode, fault_type, aerial_mode, digest, workers)
    if curve:
        crud_write_curve(curve, result)
    response = location_response(result, envelope, curve_csv=curve)
    if out:
        crud_write_result(out, response)

    table = Table(show_header=False)
    table.add_row("segment", response.segment)
    table.add_row("position", f"{response.position:.1f} m")
    table.add_row("fault type", response.fault_type.value if response.fault_type else "-")
    table.add_row("mode", response.mode)
    if response.error is not None:
        table.add_row("error vs truth", f"{response.error:.1f} m")
    elif response.truth is not None:
        table.add_row("truth", f"{response.truth.segment} {response.truth.position:.1f} m")
    table.add_row("runtime", f"{response.runtime * 1e3:.1f} ms")
    console.print(table)


def resolve_path(base_dir: str, path: str) -> str:
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


def sweep_database(matrix: ScenarioMatrix, net: NetworkSpec, base_dir: str, grid: SolveGrid,
                   workers: int) -> GflDatabase:
    """The matrix's database, or a constant-parameter one built for the canonical fault types."""
    if matrix.database:
        return GflDatabase.read(resolve_path(base_dir, matrix.database))
    stored = list(dict.fromkeys(canonical_rotation(condition.fault_type)[0]
                                for condition in matrix.fault_conditions()))
    descriptor = parse_excitation(matrix.excitation)
    logger.info("building a constant-parameter database for %s", ', '.join(item.value for item in stored))
    return precalculate(net, matrix.spacing, build_excitation(descriptor, grid.dt, grid.duration), stored, grid,
                        excitation_label=descriptor.label(), model_kind='constant', workers=workers)


def tdoa_row(net: NetworkSpec, observed, far_node: str, truth_distance: float, velocity: float) -> dict:
    """Both TDOA metrics for one scenario; failures land in the row."""
    row = {}
    length = node_distances(net)[far_node]
    near = diff_smoother(tdoa_signal(observed[net.measurement]))
    far = diff_smoother(tdoa_signal(observed[far_node]))
    try:
        times = detect_arrivals(near, far, prefault_rms(net, net.measurement), prefault_rms(net, far_node))
    except EmtcError as e:
        return {'tdoa_failure': str(e)}
    classic = tdoa_classic(times, velocity, length)
    row['tdoa_classic_m'] = classic.position
    row['tdoa_classic_error_m'] = abs(classic.position - truth_distance)
    try:
        setting_free = tdoa_setting_free(times, length)
        row['tdoa_setting_free_m'] = setting_free.position
        row['tdoa_setting_free_error_m'] = abs(setting_free.position - truth_distance)
    except EmtcError as e:
        row['tdoa_failure'] = str(e)
    return row


SWEEP_COLUMNS = ['fault_type', 'segment', 'position_m', 'angle_deg', 'impedance_ohm', 'ground_resistivity',
                 'located_segment', 'located_position_m', 'error_m', 'error_percent',
                 'tdoa_classic_m', 'tdoa_classic_error_m', 'tdoa_setting_free_m', 'tdoa_setting_free_error_m',
                 'tdoa_failure', 'failure']


def summary_rows(rows: List[dict]) -> List[dict]:
    summary = []
    for method, column in (('emtc', 'error_m'),
                           ('tdoa_classic', 'tdoa_classic_error_m'),
                           ('tdoa_setting_free', 'tdoa_setting_free_error_m')):
        errors = [row[column] for row in rows if row.get(column) is not None and math.isfinite(row[column])]
        summary.append({'method': method,
                        'scenarios': len(errors),
                        'mean_abs_error_m': float(np.mean(errors)) if errors else None,
                        'max_abs_error_m': float(np.max(errors)) if errors else None})
    return summary


@app.command()
@handle_errors
def sweep(matrix_path: str = typer.Argument(..., metavar='MATRIX', help="Scenario matrix JSON."),
          workers: int = typer.Option(EMTC_WORKERS, help="Worker threads.")):
    """
    Simulates every scenario of a matrix (frequency-dependent lines unless the matrix
    says otherwise), locates it against a constant-parameter database and scores
    EMTC against both TDOA metrics.
    """
    matrix = crud_read_scenario_matrix(matrix_path)
    base_dir = os.path.dirname(os.path.abspath(matrix_path))
    net = load_network(resolve_path(base_dir, matrix.network))
    if matrix.measurement is not None:
        if matrix.measurement not in net.nodes:
            raise ParameterError(f"measurement node '{matrix.measurement}' is not a network node")
        net = net.model_copy(update={'measurement': matrix.measurement})
    if matrix.far_node is not None and matrix.far_node not in net.nodes:
        raise ParameterError(f"far node '{matrix.far_node}' is not a network node")
    grid = SolveGrid.build(matrix.grid.dt, matrix.grid.duration, matrix.grid.min_fft)
    db = sweep_database(matrix, net, base_dir, grid, workers)
    digest = network_digest(net)
    distances = node_distances(net)
    velocity = network_modes(net.geometry, net.ground, 'constant')[-1].v_fi
    observe: Tuple[str, ...] = (net.measurement,) + ((matrix.far_node,) if matrix.far_node else ())

    rows = []
    scenarios = [(rho, condition, target) for rho in matrix.ground_resistivities
                 for condition in matrix.fault_conditions() for target in matrix.positions]
    for rho, condition, target in scenarios:
        fault_type, angle, impedance = condition.fault_type, condition.angle, condition.impedance
        row = {'fault_type': fault_type.value, 'segment': target.segment, 'position_m': target.position,
               'angle_deg': angle, 'impedance_ohm': impedance, 'ground_resistivity': rho}
        try:
            faulted_net = with_ground(net, rho)
            fault = FaultSpec(segment=target.segment, position=target.position, fault_type=fault_type,
                              impedance=impedance, inception_angle=angle)
            observed = simulate_fault_at(faulted_net, fault, grid, observe, matrix.simulation_model)
            result = locate(db, observed[net.measurement], matrix.mode, fault_type, digest=digest, workers=workers)
            row['located_segment'] = result.segment
            row['located_position_m'] = result.position
            if result.segment == target.segment:
                row['error_m'] = abs(result.position - target.position)
                row['error_percent'] = 100.0 * row['error_m'] / net.segment(target.segment).length
            if matrix.far_node:
                truth = distance_from_measurement(net, target.segment, target.position, distances)
                row.update(tdoa_row(faulted_net, observed, matrix.far_node, truth, velocity))
        except (EmtcError, ValueError) as e:
            logger.error("scenario %s %s:%.1f m failed: %s", fault_type.value, target.segment, target.position, e)
            row['failure'] = str(e)
        rows.append(row)

    crud_write_table(resolve_path(base_dir, matrix.output), rows, columns=SWEEP_COLUMNS)
    summary = summary_rows(rows)
    crud_write_table(resolve_path(base_dir, matrix.comparison_output), summary)

    table = Table(title=f"{len(rows)} scenarios")
    for column in ('method', 'scenarios', 'mean |error| (m)', 'max |error| (m)'):
        table.add_column(column)
    for entry in summary:
        table.add_row(entry['method'], str(entry['scenarios']),
                      '-' if entry['mean_abs_error_m'] is None else f"{entry['mean_abs_error_m']:.1f}",
                      '-' if entry['max_abs_error_m'] is None else f"{entry['max_abs_error_m']:.1f}")
    console.print(table)


def analysis_network(network: str, rho: Optional[str]) -> NetworkSpec:
    net = load_network(network)
    return net if rho is None else with_ground(net, parse_quantity(rho, 'resistivity'))


@analyze_app.command('velocity')
@handle_errors
def analyze_velocity(network: str = typer.Argument(..., help="Network config JSON."),
                     rho: Optional[List[str]] = typer.Option(None, help="Ground resistivities; repeat the flag."),
                     f_min: str = typer.Option('1kHz', help="Lowest frequency."),
                     f_max: str = typer.Option('10MHz', help="Highest frequency."),
                     points: int = typer.Option(50, help="Log-spaced frequencies."),
                     out: str = typer.Option('velocity.csv', '--out', help="CSV of resistivity, frequency, velocity.")):
    """Wave velocity of the frequency-dependent line for one or more ground resistivities."""
    net = load_network(network)
    resistivities = [parse_quantity(value, 'resistivity') for value in rho] if rho else [net.ground.resistivity]
    rows = []
    for resistivity in resistivities:
        model = network_modes(net.geometry, with_ground(net, resistivity).ground, 'frequency_dependent')[0]
        curve = velocity_curve(model, parse_quantity(f_min, 'frequency'), parse_quantity(f_max, 'frequency'), points)
        rows.extend({'resistivity': resistivity, 'frequency': f, 'velocity': v} for f, v in curve)
    crud_write_table(out, rows, columns=['resistivity', 'frequency', 'velocity'])
    console.print(f"{len(rows)} velocity points written to {out}")


@analyze_app.command('error-model')
@handle_errors
def analyze_error_model(network: str = typer.Argument(..., help="Network config JSON."),
                        position: str = typer.Option('10km', help="Fault distance."),
                        rho: Optional[str] = typer.Option(None, help="Ground resistivity override."),
                        f_min: str = typer.Option('1kHz', help="Lowest fitted frequency."),
                        f_max: str = typer.Option('10MHz', help="Highest fitted frequency."),
                        points: int = typer.Option(50, help="Log-spaced frequencies of the fit."),
                        lam: Optional[float] = typer.Option(None, help="Measured error slope to report alongside."),
                        out: str = typer.Option('error_model.csv', '--out', help="CSV of k, f_k, predicted error.")):
    """Predicted naive-method location error per harmonic of the terminal transfer."""
    net = analysis_network(network, rho)
    x_f = parse_quantity(position, 'length')
    low = parse_quantity(f_min, 'frequency')
    model = network_modes(net.geometry, net.ground, 'frequency_dependent')[0]
    v_fi = network_modes(net.geometry, net.ground, 'constant')[0].v_fi
    fit = fit_log_velocity(velocity_curve(model, low, parse_quantity(f_max, 'frequency'), points), low)
    error_model = build_error_model(fit, v_fi, x_f, lam)
    maxima = transfer_maxima(x_f, v_fi)
    rows = [{'k': k, 'frequency': maxima[k], 'error_m': error, 'relative_error': error / x_f}
            for k, error in error_model.errors]
    crud_write_table(out, rows, columns=['k', 'frequency', 'error_m', 'relative_error'])
    console.print(f"v_c = {fit.v_c:.4g} m/s (r2 {fit.r_squared:.3f}), v_fi = {v_fi:.6g} m/s, "
                  f"dx0/x_f = {rows[0]['relative_error']:.4f}" + (f", lambda = {lam:.4f}" if lam is not None else ""))


@analyze_app.command('energy-ratio')
@handle_errors
def analyze_energy_ratio(network: str = typer.Argument(..., help="Network config JSON."),
                         position: str = typer.Option('10km', help="Fault distance."),
                         multiple: List[float] = typer.Option([20.0], help="Frequency multiples; repeat the flag."),
                         rho: Optional[str] = typer.Option(None, help="Ground resistivity override."),
                         f_nyquist: str = typer.Option('5MHz', help="Upper integration limit."),
                         out: Optional[str] = typer.Option(None, '--out', help="CSV of multiple and ratio.")):
    """Share of the terminal transfer energy below multiples of its fundamental frequency."""
    net = analysis_network(network, rho)
    x_f = parse_quantity(position, 'length')
    model = network_modes(net.geometry, net.ground, 'frequency_dependent')[0]
    rho0 = terminal_reflection(net)
    f0 = fundamental_frequency(x_f, model)
    rows = [{'fault_distance': x_f, 'multiple': m,
             'ratio': energy_ratio(x_f, rho0, model, m, parse_quantity(f_nyquist, 'frequency'), f0)}
            for m in multiple]
    if out:
        crud_write_table(out, rows, columns=['fault_distance', 'multiple', 'ratio'])
    for row in rows:
        console.print(f"m = {row['multiple']:g}: energy ratio {row['ratio']:.4f} (f0 = {f0:.0f} Hz)")
