"""
Network topology: parsing and validation of network configs, GFL enumeration
and fault-branch insertion.
"""
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union
import hashlib
import logging
import math
import os

import networkx as nx
import orjson
from pydantic import ValidationError

from app.database.schemas import (FaultBranch,
                                  FaultType,
                                  GroundModel,
                                  LineSegment,
                                  ModelKind,
                                  NetworkSpec
                                  )
from app.utils.errors import (DanglingNodeError,
                              DisconnectedNetworkError,
                              DuplicateIdError,
                              NetworkConfigError,
                              RangeError,
                              UnknownKeyError
                              )

logger = logging.getLogger(__name__)

POSITION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GflList:
    """Guessed fault locations as (segment id, position in meters), sorted per segment."""
    entries: Tuple[Tuple[str, float], ...]
    spacing: float

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def positions(self, segment_id: str) -> List[float]:
        return [position for segment, position in self.entries if segment == segment_id]


@dataclass(frozen=True)
class BranchTemplate:
    fault_type: FaultType
    impedance: float = 1.0


def parse_network(config_text: Union[str, bytes]) -> NetworkSpec:
    """
    Parses and validates a network config document.

    Args:
        config_text (str | bytes): JSON document.

    Returns:
        NetworkSpec: The validated network.

    Raises:
        UnknownKeyError: A key outside the schema.
        DuplicateIdError: A repeated node or segment id.
        DanglingNodeError: A reference to an undeclared node.
        DisconnectedNetworkError: The segment graph is not connected.
        NetworkConfigError: Any other malformed content.
    """
    try:
        document = orjson.loads(config_text)
    except orjson.JSONDecodeError as e:
        raise NetworkConfigError(f"network config is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise NetworkConfigError("network config must be a JSON object")

    try:
        net = NetworkSpec.model_validate(document)
    except ValidationError as e:
        for error in e.errors():
            if error['type'] == 'extra_forbidden':
                location = '.'.join(str(part) for part in error['loc'])
                raise UnknownKeyError(f"unknown key '{location}' in network config") from e
        raise NetworkConfigError(f"invalid network config: {e}") from e

    validate_network(net)
    return net


def load_network(path: str) -> NetworkSpec:
    if not os.path.isfile(path):
        raise NetworkConfigError(f"network config not found: {path}")
    with open(path, 'rb') as config_file:
        return parse_network(config_file.read())


def _duplicates(values) -> List[str]:
    seen, repeated = set(), []
    for value in values:
        if value in seen:
            repeated.append(value)
        seen.add(value)
    return repeated


def validate_network(net: NetworkSpec):
    repeated = _duplicates(net.nodes)
    if repeated:
        raise DuplicateIdError(f"duplicate node id '{repeated[0]}'")
    repeated = _duplicates(segment.id for segment in net.segments)
    if repeated:
        raise DuplicateIdError(f"duplicate segment id '{repeated[0]}'")
    if not net.segments:
        raise NetworkConfigError("network has no line segments")

    declared = set(net.nodes)
    references = [(f"segment '{s.id}'", node) for s in net.segments for node in (s.from_node, s.to_node)]
    references += [("termination", t.node) for t in net.terminations]
    references += [("source", s.node) for s in net.sources]
    references += [("branch", b.node) for b in net.branches]
    references.append(("measurement", net.measurement))
    for owner, node in references:
        if node not in declared:
            raise DanglingNodeError(f"{owner} references undeclared node '{node}'")

    for segment in net.segments:
        if segment.from_node == segment.to_node:
            raise NetworkConfigError(f"segment '{segment.id}' starts and ends at node '{segment.from_node}'")

    graph = topology_graph(net)
    if not nx.is_connected(graph):
        islands = sorted(sorted(component) for component in nx.connected_components(graph))
        raise DisconnectedNetworkError(f"network is disconnected: {len(islands)} islands, e.g. {islands[-1]}")


def topology_graph(net: NetworkSpec) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(net.nodes)
    for segment in net.segments:
        graph.add_edge(segment.from_node, segment.to_node, key=segment.id, length=segment.length)
    return graph


def gfl_count(length: float, spacing: float) -> int:
    """Number of interior grid points k*spacing strictly inside (0, length)."""
    return max(int(math.ceil(length / spacing - POSITION_TOLERANCE)) - 1, 0)


def enumerate_gfls(net: NetworkSpec, spacing: float) -> GflList:
    if spacing <= 0:
        raise RangeError(f"GFL spacing must be positive, got {spacing}")
    entries = []
    for segment in net.segments:
        count = gfl_count(segment.length, spacing)
        if count == 0:
            logger.warning("segment %s (%.1f m) is not longer than the GFL spacing %.1f m; no GFLs",
                           segment.id, segment.length, spacing)
        entries.extend((segment.id, k * spacing) for k in range(1, count + 1))
    return GflList(entries=tuple(entries), spacing=spacing)


def split_node_id(segment_id: str, position: float) -> str:
    return f"{segment_id}@{position:.6f}"


def validate_position(net: NetworkSpec, segment_id: str, position: float) -> LineSegment:
    """
    Raises:
        RangeError: Unknown segment, or a position outside it.
    """
    try:
        segment = net.segment(segment_id)
    except KeyError:
        raise RangeError(f"unknown segment '{segment_id}'")
    if position < -POSITION_TOLERANCE or position > segment.length + POSITION_TOLERANCE:
        raise RangeError(f"position {position} m is outside segment '{segment_id}' of length {segment.length} m")
    return segment


def insert_branch(net: NetworkSpec,
                  at: Tuple[str, float],
                  branch: Optional[BranchTemplate] = None) -> Tuple[NetworkSpec, str]:
    """
    Splits a segment at a position and attaches a short-circuit branch there.

    Args:
        net (NetworkSpec): Network to derive from.
        at (Tuple[str, float]): Segment id and position in meters from its from-node.
        branch (Optional[BranchTemplate]): Fault type and impedance; None for a healthy split.

    Returns:
        Tuple[NetworkSpec, str]: The derived network and the node carrying the branch.

    Raises:
        RangeError: Position outside the segment.
    """
    segment_id, position = at
    segment = validate_position(net, segment_id, position)

    if position <= POSITION_TOLERANCE:
        node, derived = segment.from_node, net
    elif position >= segment.length - POSITION_TOLERANCE:
        node, derived = segment.to_node, net
    else:
        node = split_node_id(segment_id, position)
        first = segment.model_copy(update={'id': f"{segment_id}/1", 'to_node': node, 'length': position})
        second = segment.model_copy(update={'id': f"{segment_id}/2", 'from_node': node,
                                            'length': segment.length - position})
        segments: List[LineSegment] = []
        for existing in net.segments:
            segments.extend((first, second) if existing.id == segment_id else (existing,))
        derived = net.model_copy(update={'nodes': net.nodes + (node,), 'segments': tuple(segments)})

    if branch is not None:
        attached = FaultBranch(node=node, fault_type=branch.fault_type, impedance=branch.impedance)
        derived = derived.model_copy(update={'branches': derived.branches + (attached,)})
    return derived, node


def network_digest(net: NetworkSpec) -> int:
    """64-bit digest of topology, terminations, sources, geometry and measurement node."""
    payload = net.model_dump(mode='json', exclude={'ground', 'description', 'branches'})
    encoded = orjson.dumps(payload, option=orjson.OPT_SORT_KEYS)
    return int.from_bytes(hashlib.blake2b(encoded, digest_size=8).digest(), 'little')


def node_distances(net: NetworkSpec, origin: Optional[str] = None) -> Dict[str, float]:
    """Shortest path length along the lines from ``origin`` (the measurement node by default) to every node."""
    graph = nx.Graph()
    for segment in net.segments:
        current = graph.get_edge_data(segment.from_node, segment.to_node, {}).get('length', math.inf)
        graph.add_edge(segment.from_node, segment.to_node, length=min(current, segment.length))
    return nx.single_source_dijkstra_path_length(graph, origin or net.measurement, weight='length')


def distance_from_measurement(net: NetworkSpec, segment_id: str, position: float,
                              distances: Optional[Dict[str, float]] = None) -> float:
    distances = node_distances(net) if distances is None else distances
    segment = net.segment(segment_id)
    return min(distances[segment.from_node] + position,
               distances[segment.to_node] + segment.length - position)


def with_ground(net: NetworkSpec, resistivity: float) -> NetworkSpec:
    ground = GroundModel(resistivity=resistivity,
                         relative_permittivity=net.ground.relative_permittivity,
                         perfect=False)
    return net.model_copy(update={'ground': ground})


def with_model_kind(net: NetworkSpec, kind: Optional[ModelKind]) -> NetworkSpec:
    if kind is None:
        return net
    segments = tuple(segment.model_copy(update={'model_kind': kind}) for segment in net.segments)
    return net.model_copy(update={'segments': segments})


_ROTATIONS = {
    FaultType.PG_A: (FaultType.PG_A, 0),
    FaultType.PG_B: (FaultType.PG_A, 1),
    FaultType.PG_C: (FaultType.PG_A, 2),
    FaultType.PP_BC: (FaultType.PP_BC, 0),
    FaultType.PP_CA: (FaultType.PP_BC, 1),
    FaultType.PP_AB: (FaultType.PP_BC, 2),
    FaultType.THREE_PHASE: (FaultType.THREE_PHASE, 0),
}


def canonical_rotation(fault_type: FaultType) -> Tuple[FaultType, int]:
    """
    Canonical fault type (PG-a, PP-bc or 3P) and the phase shift mapping a fault onto it.

    Rolling phases by ``shift`` (phase ``shift`` becomes a) turns the fault into
    the canonical one on an ideally transposed line.
    """
    return _ROTATIONS[FaultType(fault_type)]
