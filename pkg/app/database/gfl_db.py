"""
Binary store of pre-calculated GFL transients.

Layout (little-endian):

    magic "EMTC" | u32 version | u64 network digest | f64 dt | u64 sample count
    | f64 spacing | u32 len + utf-8 excitation descriptor
    | u32 segment count, per segment: u32 len + utf-8 id, f64 length,
      f64 from-node distance, f64 to-node distance
    | u32 record count, per record: u32 segment index, f64 position,
      u8 fault type, u8 mode id, sample count x f64
"""
from dataclasses import dataclass, field
from typing import Iterable, List, Tuple
import logging
import struct

import numpy as np

from app.database.schemas import FaultType, ModeName, NetworkSpec
from app.utils.errors import DatabaseFormatError

logger = logging.getLogger(__name__)

MAGIC = b'EMTC'
FORMAT_VERSION = 1

_HEADER = struct.Struct('<4sIQdQd')
_U32 = struct.Struct('<I')
_SEGMENT = struct.Struct('<ddd')


@dataclass(frozen=True)
class SegmentEntry:
    """Segment id with the path distances of its ends from the measurement node."""
    id: str
    length: float
    from_distance: float
    to_distance: float

    def distance(self, position: float) -> float:
        return min(self.from_distance + position, self.to_distance + self.length - position)


def record_dtype(n_samples: int) -> np.dtype:
    return np.dtype([('segment', '<u4'),
                     ('position', '<f8'),
                     ('fault_type', 'u1'),
                     ('mode', 'u1'),
                     ('samples', '<f8', (n_samples,))])


@dataclass
class GflDatabase:
    """
    Pre-calculated measurement-node transients of every GFL, fault type and mode.

    Attributes:
        digest (int): Digest of the generating network.
        dt (float): Time step in seconds.
        n_samples (int): Samples per record.
        spacing (float): GFL spacing in meters.
        excitation (str): Excitation descriptor.
        segments (Tuple[SegmentEntry, ...]): Segment table referenced by the records.
        records (np.ndarray): Structured array of records, in canonical order.
    """
    digest: int
    dt: float
    n_samples: int
    spacing: float
    excitation: str
    segments: Tuple[SegmentEntry, ...]
    records: np.ndarray = field(repr=False)
    version: int = FORMAT_VERSION

    def __len__(self) -> int:
        return self.records.shape[0]

    @property
    def fault_types(self) -> List[FaultType]:
        return [FaultType.from_code(int(code)) for code in np.unique(self.records['fault_type'])]

    def has(self, fault_type: FaultType, mode: ModeName) -> bool:
        return bool(np.any(self._mask(fault_type, mode)))

    def _mask(self, fault_type: FaultType, mode: ModeName) -> np.ndarray:
        return ((self.records['fault_type'] == FaultType(fault_type).code)
                & (self.records['mode'] == ModeName(mode).code))

    def select(self, fault_type: FaultType, mode: ModeName) -> np.ndarray:
        """Records of one fault type and mode, in canonical GFL order."""
        return self.records[self._mask(fault_type, mode)]

    def segment_id(self, index: int) -> str:
        return self.segments[index].id

    def distance(self, index: int, position: float) -> float:
        return self.segments[index].distance(position)

    def to_bytes(self) -> bytes:
        excitation = self.excitation.encode('utf-8')
        parts = [_HEADER.pack(MAGIC, self.version, self.digest, self.dt, self.n_samples, self.spacing),
                 _U32.pack(len(excitation)), excitation, _U32.pack(len(self.segments))]
        for segment in self.segments:
            name = segment.id.encode('utf-8')
            parts += [_U32.pack(len(name)), name,
                      _SEGMENT.pack(segment.length, segment.from_distance, segment.to_distance)]
        parts += [_U32.pack(len(self)), self.records.astype(record_dtype(self.n_samples), copy=False).tobytes()]
        return b''.join(parts)

    @classmethod
    def from_bytes(cls, payload: bytes) -> "GflDatabase":
        reader = _Reader(payload)
        magic, version, digest, dt, n_samples, spacing = reader.unpack(_HEADER)
        if magic != MAGIC:
            raise DatabaseFormatError("not a GFL database (bad magic)")
        if version != FORMAT_VERSION:
            raise DatabaseFormatError(f"unsupported database version {version}")
        excitation = reader.text()
        segments = []
        for _ in range(reader.unpack(_U32)[0]):
            name = reader.text()
            segments.append(SegmentEntry(name, *reader.unpack(_SEGMENT)))
        count = reader.unpack(_U32)[0]
        dtype = record_dtype(n_samples)
        body = reader.take(count * dtype.itemsize)
        if reader.remaining:
            raise DatabaseFormatError(f"{reader.remaining} trailing bytes after the last record")
        records = np.frombuffer(body, dtype=dtype, count=count)
        if count and int(records['segment'].max()) >= len(segments):
            raise DatabaseFormatError("record references a segment outside the segment table")
        return cls(digest=digest, dt=dt, n_samples=n_samples, spacing=spacing, excitation=excitation,
                   segments=tuple(segments), records=records, version=version)

    def write(self, path: str):
        with open(path, 'wb') as database_file:
            database_file.write(self.to_bytes())
        logger.info("wrote %d GFL records to %s", len(self), path)

    @classmethod
    def read(cls, path: str) -> "GflDatabase":
        with open(path, 'rb') as database_file:
            return cls.from_bytes(database_file.read())


class _Reader:

    def __init__(self, payload: bytes):
        self.payload = memoryview(payload)
        self.offset = 0

    @property
    def remaining(self) -> int:
        return len(self.payload) - self.offset

    def take(self, size: int) -> bytes:
        if size > self.remaining:
            raise DatabaseFormatError("database file is truncated")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk.tobytes()

    def unpack(self, layout: struct.Struct) -> tuple:
        return layout.unpack(self.take(layout.size))

    def text(self) -> str:
        return self.take(self.unpack(_U32)[0]).decode('utf-8')


def build_records(n_samples: int, rows: Iterable[Tuple[int, float, FaultType, ModeName, np.ndarray]]) -> np.ndarray:
    rows = list(rows)
    records = np.zeros(len(rows), dtype=record_dtype(n_samples))
    for k, (segment, position, fault_type, mode, samples) in enumerate(rows):
        records[k] = (segment, position, FaultType(fault_type).code, ModeName(mode).code, samples)
    return records


def segment_table(net: NetworkSpec, distances) -> Tuple[SegmentEntry, ...]:
    return tuple(SegmentEntry(segment.id, segment.length,
                              float(distances[segment.from_node]), float(distances[segment.to_node]))
                 for segment in net.segments)
