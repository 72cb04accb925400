import io
import os
from typing import Any, Dict, List, Optional

import numpy as np
import orjson
import pandas as pd
from pydantic import ValidationError

from app.core.locator import LocationResult, cse_curve
from app.core.signal import PhaseTriple
from app.database.schemas import (CurvePoint,
                                  EnvelopeMetadata,
                                  LocationResponse,
                                  MeasurementEnvelope,
                                  PhaseSamples,
                                  ScenarioMatrix
                                  )
from app.utils.errors import ParameterError, ShapeError

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY


def dumps(payload: Any) -> bytes:
    return orjson.dumps(payload, option=JSON_OPTIONS)


def phases_to_envelope(phases: PhaseTriple, metadata: Optional[EnvelopeMetadata] = None) -> MeasurementEnvelope:
    return MeasurementEnvelope(dt=phases.dt,
                               t0=phases.a.t0,
                               phases=PhaseSamples(a=phases.a.samples.tolist(),
                                                   b=phases.b.samples.tolist(),
                                                   c=phases.c.samples.tolist()),
                               metadata=metadata)


def envelope_to_phases(envelope: MeasurementEnvelope) -> PhaseTriple:
    samples = [envelope.phases.a, envelope.phases.b, envelope.phases.c]
    if len({len(values) for values in samples}) != 1:
        raise ShapeError("measurement phases differ in length")
    return PhaseTriple.from_array(envelope.dt, np.array(samples, dtype=float), envelope.t0)


def envelope_digest(envelope: MeasurementEnvelope) -> Optional[int]:
    if envelope.metadata is None or envelope.metadata.network_digest is None:
        return None
    try:
        return int(envelope.metadata.network_digest, 16)
    except ValueError:
        raise ParameterError(f"network digest '{envelope.metadata.network_digest}' is not hexadecimal")


def parse_measurement(payload: bytes, name: str = 'measurement.json') -> MeasurementEnvelope:
    """
    Parses a measurement file: the JSON envelope, or CSV with columns time_s,a,b,c.

    Raises:
        ParameterError: Malformed content.
    """
    if name.lower().endswith('.csv'):
        frame = pd.read_csv(io.BytesIO(payload))
        if list(frame.columns) != ['time_s', 'a', 'b', 'c']:
            raise ShapeError(f"expected columns time_s,a,b,c, got {list(frame.columns)}")
        times = frame['time_s'].to_numpy(dtype=float)
        if times.size < 2:
            raise ShapeError("a CSV measurement needs at least two rows")
        return MeasurementEnvelope(dt=float(times[1] - times[0]),
                                   t0=float(times[0]),
                                   phases=PhaseSamples(**{phase: frame[phase].tolist() for phase in 'abc'}))
    try:
        return MeasurementEnvelope.model_validate(orjson.loads(payload))
    except (orjson.JSONDecodeError, ValidationError) as e:
        raise ParameterError(f"invalid measurement envelope: {e}") from e


def crud_read_measurement(path: str) -> MeasurementEnvelope:
    if not os.path.isfile(path):
        raise ParameterError(f"measurement file not found: {path}")
    with open(path, 'rb') as measurement_file:
        return parse_measurement(measurement_file.read(), path)


def crud_write_measurement(path: str, envelope: MeasurementEnvelope):
    if path.lower().endswith('.csv'):
        times = envelope.t0 + envelope.dt * np.arange(len(envelope.phases.a))
        frame = pd.DataFrame({'time_s': times, 'a': envelope.phases.a, 'b': envelope.phases.b, 'c': envelope.phases.c})
        frame.to_csv(path, index=False, float_format='%.17g')
        return
    with open(path, 'wb') as measurement_file:
        measurement_file.write(dumps(envelope.model_dump(mode='json')))


def location_error(result: LocationResult, envelope: Optional[MeasurementEnvelope]) -> Optional[float]:
    """Distance between prediction and annotated truth; None without truth or on another segment."""
    if envelope is None or envelope.metadata is None or envelope.metadata.truth is None:
        return None
    truth = envelope.metadata.truth
    if truth.segment != result.segment:
        return None
    return abs(result.position - truth.position)


def curve_frame(result: LocationResult) -> pd.DataFrame:
    return pd.DataFrame(cse_curve(result), columns=['segment', 'position_m', 'energy'])


def location_response(result: LocationResult, envelope: Optional[MeasurementEnvelope] = None,
                      curve_csv: Optional[str] = None, include_curve: bool = False) -> LocationResponse:
    truth = envelope.metadata.truth if envelope is not None and envelope.metadata is not None else None
    curve = None
    if include_curve:
        curve = [CurvePoint(segment=segment, position=position, energy=energy)
                 for segment, position, energy in cse_curve(result)]
    return LocationResponse(segment=result.segment,
                            position=result.position,
                            fault_type=result.fault_type,
                            mode=result.mode.value,
                            runtime=result.runtime,
                            classification=result.verdict.fault_type if result.verdict else None,
                            error=location_error(result, envelope),
                            truth=truth,
                            curve_csv=curve_csv,
                            curve=curve)


def crud_write_result(path: str, response: LocationResponse):
    with open(path, 'wb') as result_file:
        result_file.write(dumps(response.model_dump(mode='json', exclude_none=True)))


def crud_write_curve(path: str, result: LocationResult):
    curve_frame(result).to_csv(path, index=False, float_format='%.17g')


def crud_write_table(path: str, rows: List[Dict[str, Any]], columns: Optional[List[str]] = None):
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)


def crud_read_scenario_matrix(path: str) -> ScenarioMatrix:
    if not os.path.isfile(path):
        raise ParameterError(f"scenario matrix not found: {path}")
    with open(path, 'rb') as matrix_file:
        try:
            return ScenarioMatrix.model_validate(orjson.loads(matrix_file.read()))
        except (orjson.JSONDecodeError, ValidationError) as e:
            raise ParameterError(f"invalid scenario matrix {path}: {e}") from e
