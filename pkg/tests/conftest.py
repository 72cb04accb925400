import copy
import os

import orjson
import pytest

from app.config import CONFIGS_FOLDER
from app.core.fdsolver import SolveGrid
from app.core.network import load_network, parse_network
from app.core.signal import lightning_impulse

# 2-km lines keep the GFL counts of the suite small
SINGLE_LINE = {
    "version": 1,
    "nodes": ["S", "R"],
    "segments": [{"id": "L1", "from_node": "S", "to_node": "R", "length": 2000.0, "model_kind": "constant"}],
    "terminations": [{"node": "S", "impedance": 10000.0}, {"node": "R", "impedance": 10000.0}],
    "sources": [{"node": "S", "amplitude": 10000.0, "frequency": 50.0, "impedance": 10000.0}],
    "measurement": "S",
    "ground": {"conductivity": 0.1, "relative_permittivity": 10.0},
    "geometry": {"height": 10.0, "radius": 0.005, "horizontal_offsets": [0.0]},
}

THREE_PHASE_LINE = {
    "version": 1,
    "nodes": ["S", "R"],
    "segments": [{"id": "L1", "from_node": "S", "to_node": "R", "length": 2000.0, "model_kind": "constant"}],
    "terminations": [{"node": "S", "impedance": 10000.0}, {"node": "R", "impedance": 10000.0}],
    "sources": [{"node": "S", "amplitude": 8164.97, "frequency": 50.0, "impedance": 10000.0}],
    "measurement": "S",
    "ground": {"resistivity": 1000.0, "relative_permittivity": 10.0},
    "geometry": {"height": 10.0, "radius": 0.005, "horizontal_offsets": [-1.0, 0.0, 1.0]},
}

BRANCHED = {
    "version": 1,
    "nodes": ["M", "J", "A", "B"],
    "segments": [
        {"id": "F", "from_node": "M", "to_node": "J", "length": 1000.0, "model_kind": "constant"},
        {"id": "BA", "from_node": "J", "to_node": "A", "length": 800.0, "model_kind": "constant"},
        {"id": "BB", "from_node": "J", "to_node": "B", "length": 600.0, "model_kind": "constant"},
    ],
    "terminations": [{"node": "M", "impedance": 10000.0}, {"node": "A", "impedance": 10000.0},
                     {"node": "B", "impedance": 10000.0}],
    "sources": [{"node": "M", "amplitude": 10000.0, "frequency": 50.0, "impedance": 10000.0}],
    "measurement": "M",
    "ground": {"conductivity": 0.1, "relative_permittivity": 10.0},
    "geometry": {"height": 10.0, "radius": 0.005, "horizontal_offsets": [0.0]},
}


def config_bytes(document: dict) -> bytes:
    return orjson.dumps(document)


@pytest.fixture
def single_config() -> dict:
    return copy.deepcopy(SINGLE_LINE)


@pytest.fixture
def three_phase_config() -> dict:
    return copy.deepcopy(THREE_PHASE_LINE)


@pytest.fixture
def single_net():
    return parse_network(config_bytes(SINGLE_LINE))


@pytest.fixture
def three_phase_net():
    return parse_network(config_bytes(THREE_PHASE_LINE))


@pytest.fixture
def branched_net():
    return parse_network(config_bytes(BRANCHED))


@pytest.fixture
def line_20km():
    return load_network(os.path.join(CONFIGS_FOLDER, 'single_20km.json'))


@pytest.fixture
def grid() -> SolveGrid:
    return SolveGrid.build(1e-7, 5e-3)


@pytest.fixture
def impulse(grid):
    return lightning_impulse(grid.dt, grid.duration)
