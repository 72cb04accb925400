import os

import numpy as np
import orjson
import pytest

from app.config import CONFIGS_FOLDER
from app.core.locator import CurveEntry, LocationResult
from app.core.signal import PhaseTriple
from app.database.crud import (crud_read_measurement,
                               crud_read_scenario_matrix,
                               crud_write_curve,
                               crud_write_measurement,
                               envelope_digest,
                               envelope_to_phases,
                               location_error,
                               location_response,
                               parse_measurement,
                               phases_to_envelope
                               )
from app.database.schemas import EnvelopeMetadata, FaultSpec, FaultType, MeasurementEnvelope, ModeName, PhaseSamples
from app.utils.errors import ParameterError, ShapeError


def make_result(segment: str = 'L1', position: float = 500.0) -> LocationResult:
    curve = (CurveEntry('L1', 400.0, 0.5), CurveEntry('L1', 500.0, 1.0))
    return LocationResult(segment=segment, position=position, curve=curve, fault_type=FaultType.PG_A,
                          mode=ModeName.RAW, runtime=0.01)


def annotated(position: float) -> MeasurementEnvelope:
    return MeasurementEnvelope(dt=1e-7, phases=PhaseSamples(a=[0.0], b=[0.0], c=[0.0]),
                               metadata=EnvelopeMetadata(truth=FaultSpec(segment='L1', position=position)))


def test_csv_measurement_is_parsed():
    payload = b"time_s,a,b,c\n0.0,1,2,3\n1e-7,4,5,6\n2e-7,7,8,9\n"
    envelope = parse_measurement(payload, 'scope.csv')
    assert envelope.dt == pytest.approx(1e-7)
    assert envelope.phases.c == [3.0, 6.0, 9.0]


def test_csv_measurement_needs_the_phase_columns():
    with pytest.raises(ShapeError):
        parse_measurement(b"time,va,vb,vc\n0,1,2,3\n1,1,2,3\n", 'scope.csv')


def test_malformed_json_measurement():
    with pytest.raises(ParameterError):
        parse_measurement(b'{"dt": -1, "phases": {"a": [], "b": [], "c": []}}')


def test_unequal_phases_are_rejected():
    envelope = MeasurementEnvelope(dt=1e-7, phases=PhaseSamples(a=[1.0, 2.0], b=[1.0], c=[1.0, 2.0]))
    with pytest.raises(ShapeError):
        envelope_to_phases(envelope)


def test_csv_file_keeps_samples(tmp_path):
    phases = PhaseTriple.from_array(1e-7, np.arange(12, dtype=float).reshape(3, 4))
    path = str(tmp_path / 'measured.csv')
    crud_write_measurement(path, phases_to_envelope(phases))
    restored = envelope_to_phases(crud_read_measurement(path))
    assert np.array_equal(restored.as_array(), phases.as_array())


def test_json_file_keeps_metadata(tmp_path):
    phases = PhaseTriple.from_array(1e-7, np.ones((3, 4)))
    path = str(tmp_path / 'measured.json')
    crud_write_measurement(path, phases_to_envelope(phases, EnvelopeMetadata(network_digest='00ff')))
    assert envelope_digest(crud_read_measurement(path)) == 255


def test_missing_measurement_file(tmp_path):
    with pytest.raises(ParameterError):
        crud_read_measurement(str(tmp_path / 'absent.json'))


def test_digest_must_be_hexadecimal():
    envelope = MeasurementEnvelope(dt=1e-7, phases=PhaseSamples(a=[0.0], b=[0.0], c=[0.0]),
                                   metadata=EnvelopeMetadata(network_digest='not-hex'))
    with pytest.raises(ParameterError):
        envelope_digest(envelope)


def test_location_error_needs_the_same_segment():
    assert location_error(make_result(), annotated(530.0)) == pytest.approx(30.0)
    assert location_error(make_result(segment='L2'), annotated(530.0)) is None
    assert location_error(make_result(), None) is None


def test_response_carries_truth_and_curve():
    response = location_response(make_result(), annotated(500.0), include_curve=True)
    assert response.error == 0.0
    assert response.truth.position == 500.0
    assert [point.energy for point in response.curve] == [0.5, 1.0]


def test_curve_csv(tmp_path):
    path = tmp_path / 'curve.csv'
    crud_write_curve(str(path), make_result())
    assert path.read_text().splitlines()[0] == 'segment,position_m,energy'


def test_scenario_matrix(tmp_path):
    path = tmp_path / 'matrix.json'
    path.write_bytes(orjson.dumps({'unknown': True}))
    with pytest.raises(ParameterError):
        crud_read_scenario_matrix(str(path))


@pytest.mark.parametrize('name', ['aerial_100km.json', 'conditions_300km.json', 'radial_pg.json', 'ieee9_pg.json',
                                  'grid_20km.json', 'naive_40km.json', 'ieee9_bus8.json'])
def test_shipped_scenario_matrices_parse(name):
    matrix = crud_read_scenario_matrix(os.path.join(CONFIGS_FOLDER, 'scenarios', name))
    assert matrix.positions
    assert matrix.network.startswith('../')
    assert matrix.fault_conditions()


def test_condition_columns_are_kept_as_listed():
    matrix = crud_read_scenario_matrix(os.path.join(CONFIGS_FOLDER, 'scenarios', 'conditions_300km.json'))
    columns = [(condition.fault_type, condition.angle, condition.impedance) for condition in matrix.fault_conditions()]
    assert columns == [(FaultType.PG_A, 5.0, 10.0), (FaultType.PG_A, 90.0, 10.0), (FaultType.PG_A, 90.0, 1.0),
                       (FaultType.PG_A, 90.0, 100.0), (FaultType.PP_BC, 5.0, 1.0), (FaultType.PP_BC, 90.0, 1.0),
                       (FaultType.THREE_PHASE, 5.0, 1.0), (FaultType.THREE_PHASE, 90.0, 1.0)]
    assert matrix.far_node == 'R'


def test_axes_expand_to_their_product(tmp_path):
    path = tmp_path / 'matrix.json'
    path.write_bytes(orjson.dumps({'network': 'net.json', 'fault_types': ['PG-a', 'PP-bc'],
                                   'positions': [{'segment': 'L1', 'position': 100.0}],
                                   'angles': [5.0, 90.0], 'impedances': [1.0]}))
    conditions = crud_read_scenario_matrix(str(path)).fault_conditions()
    assert [(c.fault_type, c.angle) for c in conditions] == [(FaultType.PG_A, 5.0), (FaultType.PG_A, 90.0),
                                                             (FaultType.PP_BC, 5.0), (FaultType.PP_BC, 90.0)]


def test_matrix_needs_conditions_or_fault_types(tmp_path):
    path = tmp_path / 'matrix.json'
    path.write_bytes(orjson.dumps({'network': 'net.json', 'positions': [{'segment': 'L1', 'position': 100.0}]}))
    with pytest.raises(ParameterError):
        crud_read_scenario_matrix(str(path))
