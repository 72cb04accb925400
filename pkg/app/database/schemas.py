from enum import Enum
from typing import List, Literal, Optional, Tuple

from pydantic import (BaseModel,
                      ConfigDict,
                      Field,
                      field_validator,
                      model_validator
                      )


class FaultType(str, Enum):
    PG_A = 'PG-a'
    PG_B = 'PG-b'
    PG_C = 'PG-c'
    PP_AB = 'PP-ab'
    PP_BC = 'PP-bc'
    PP_CA = 'PP-ca'
    THREE_PHASE = '3P'

    @property
    def code(self) -> int:
        return list(FaultType).index(self)

    @classmethod
    def from_code(cls, code: int) -> "FaultType":
        return list(cls)[code]

    @property
    def is_ground(self) -> bool:
        return self.value.startswith('PG')


ModelKind = Literal['constant', 'frequency_dependent']


class FrozenModel(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class WireGeometry(FrozenModel):
    """
    Equivalent single-conductor-per-phase geometry.

    Attributes:
        height (float): Conductor height above ground in meters.
        radius (float): Conductor radius in meters.
        horizontal_offsets (Tuple[float, ...]): Horizontal position of each phase in meters (1 or 3 entries).
        conductor_conductivity (float): Conductor conductivity in S/m.
        transposed (bool): Whether the line is ideally transposed.
    """
    height: float
    radius: float
    horizontal_offsets: Tuple[float, ...] = (0.0,)
    conductor_conductivity: float = 5.8e7
    transposed: bool = True

    @model_validator(mode='after')
    def validate_geometry(self):
        if not self.height > self.radius > 0:
            raise ValueError(f"geometry requires height > radius > 0, got height={self.height}, radius={self.radius}")
        if self.conductor_conductivity <= 0:
            raise ValueError("conductor conductivity must be positive")
        if len(self.horizontal_offsets) not in (1, 3):
            raise ValueError("horizontal_offsets must list 1 or 3 phases")
        return self

    @property
    def n_phases(self) -> int:
        return len(self.horizontal_offsets)


class GroundModel(FrozenModel):
    """
    Homogeneous lossy ground.

    Attributes:
        resistivity (float): Ground resistivity in ohm-meters.
        relative_permittivity (float): Relative permittivity of the soil.
        perfect (bool): Forces the lossless image solution.
    """
    resistivity: float = 100.0
    relative_permittivity: float = 10.0
    perfect: bool = False

    @model_validator(mode='before')
    @classmethod
    def accept_conductivity(cls, values):
        if isinstance(values, dict) and 'conductivity' in values:
            values = dict(values)
            sigma = values.pop('conductivity')
            if sigma is None or sigma <= 0:
                raise ValueError("ground conductivity must be positive")
            values['resistivity'] = 1.0 / sigma
        return values

    @field_validator('resistivity')
    @classmethod
    def validate_resistivity(cls, value):
        if value <= 0:
            raise ValueError("ground resistivity must be positive")
        return value

    @field_validator('relative_permittivity')
    @classmethod
    def validate_permittivity(cls, value):
        if value < 1:
            raise ValueError("relative permittivity must be at least 1")
        return value

    @property
    def conductivity(self) -> float:
        return 1.0 / self.resistivity


class LineSegment(FrozenModel):
    id: str
    from_node: str
    to_node: str
    length: float
    model_kind: ModelKind = 'frequency_dependent'

    @field_validator('length')
    @classmethod
    def validate_length(cls, value):
        if value <= 0:
            raise ValueError("segment length must be positive")
        return value


class Termination(FrozenModel):
    node: str
    impedance: float = 10e3

    @field_validator('impedance')
    @classmethod
    def validate_impedance(cls, value):
        if value <= 0:
            raise ValueError("termination impedance must be positive")
        return value


class Source(FrozenModel):
    """
    Balanced three-phase source (single-phase on one-conductor networks).

    Attributes:
        node (str): Bus the source is connected to.
        amplitude (float): Peak phase voltage in volts.
        frequency (float): Power frequency in hertz.
        phase (float): Phase-a angle in degrees.
        impedance (float): Internal series impedance in ohms.
    """
    node: str
    amplitude: float
    frequency: float = 50.0
    phase: float = 0.0
    impedance: float = 10e3

    @field_validator('impedance')
    @classmethod
    def validate_impedance(cls, value):
        if value <= 0:
            raise ValueError("source impedance must be positive")
        return value


class FaultBranch(FrozenModel):
    """Short-circuit branch attached at a node (fault or GFL)."""
    node: str
    fault_type: FaultType
    impedance: float = 1.0

    @field_validator('impedance')
    @classmethod
    def validate_impedance(cls, value):
        if value < 0:
            raise ValueError("fault impedance must be non-negative")
        return value


class NetworkSpec(FrozenModel):
    version: Literal[1] = 1
    description: Optional[str] = None
    nodes: Tuple[str, ...]
    segments: Tuple[LineSegment, ...]
    terminations: Tuple[Termination, ...] = ()
    sources: Tuple[Source, ...] = ()
    measurement: str
    ground: GroundModel = GroundModel()
    geometry: WireGeometry
    branches: Tuple[FaultBranch, ...] = ()

    @property
    def n_phases(self) -> int:
        return self.geometry.n_phases

    def segment(self, segment_id: str) -> LineSegment:
        for segment in self.segments:
            if segment.id == segment_id:
                return segment
        raise KeyError(segment_id)

    def segment_index(self, segment_id: str) -> int:
        return [segment.id for segment in self.segments].index(segment_id)


class FaultSpec(FrozenModel):
    segment: str
    position: float
    fault_type: FaultType = FaultType.PG_A
    impedance: float = 1.0
    inception_angle: float = 90.0

    @field_validator('impedance')
    @classmethod
    def validate_impedance(cls, value):
        if value < 0:
            raise ValueError("fault impedance must be non-negative")
        return value

    @field_validator('position')
    @classmethod
    def validate_position(cls, value):
        if value < 0:
            raise ValueError("fault position must be non-negative")
        return value


class PhaseSamples(FrozenModel):
    a: List[float]
    b: List[float]
    c: List[float]


class EnvelopeMetadata(FrozenModel):
    network_digest: Optional[str] = None
    truth: Optional[FaultSpec] = None
    ground_resistivity: Optional[float] = None
    model_kind: Optional[ModelKind] = None
    node: Optional[str] = None


class MeasurementEnvelope(FrozenModel):
    """
    Measured (or simulated) three-phase voltage at one node.

    Attributes:
        dt (float): Time step in seconds.
        t0 (float): Start time in seconds.
        unit (str): Physical unit of the samples.
        phases (PhaseSamples): Samples of phases a, b and c.
        metadata (Optional[EnvelopeMetadata]): Digest and truth annotation used for self-scoring.
    """
    dt: float
    t0: float = 0.0
    unit: str = 'V'
    phases: PhaseSamples
    metadata: Optional[EnvelopeMetadata] = None

    @field_validator('dt')
    @classmethod
    def validate_dt(cls, value):
        if value <= 0:
            raise ValueError("dt must be positive")
        return value


class CurvePoint(FrozenModel):
    segment: str
    position: float
    energy: float


class LocationResponse(FrozenModel):
    segment: str
    position: float
    fault_type: Optional[FaultType]
    mode: str
    runtime: float
    classification: Optional[FaultType] = None
    error: Optional[float] = None
    truth: Optional[FaultSpec] = None
    curve_csv: Optional[str] = None
    curve: Optional[List[CurvePoint]] = None


class ScenarioPosition(FrozenModel):
    segment: str
    position: float


class ScenarioCondition(FrozenModel):
    """One fault condition of a sweep: type, inception angle in degrees and impedance in ohms."""
    fault_type: FaultType
    angle: float = 90.0
    impedance: float = 10.0

    @field_validator('impedance')
    @classmethod
    def validate_impedance(cls, value: float) -> float:
        if value < 0:
            raise ValueError(f"fault impedance must be non-negative, got {value}")
        return value


class ScenarioGrid(FrozenModel):
    dt: float = 1e-6
    duration: float = 5e-3
    min_fft: Optional[int] = None


class ScenarioMatrix(FrozenModel):
    """
    Axes of a fault-condition sweep.

    Attributes:
        network (str): Path of the network config, relative to the matrix file.
        database (Optional[str]): Existing GFL database; built on the fly when absent.
        spacing (float): GFL spacing in meters when the database is built on the fly.
        excitation (str): Excitation spec used for pre-calculation.
        conditions (List[ScenarioCondition]): Explicit fault conditions; replaces the
            product of ``fault_types``, ``angles`` and ``impedances`` when given.
        fault_types (List[FaultType]): Fault types to simulate.
        positions (List[ScenarioPosition]): Fault positions.
        angles (List[float]): Inception angles in degrees.
        impedances (List[float]): Fault impedances in ohms.
        ground_resistivities (List[float]): Ground resistivities of the fault simulation in ohm-meters.
        mode (str): Location variant, ``naive`` or ``aerial``.
        far_node (Optional[str]): Remote terminal for the TDOA baselines.
        measurement (Optional[str]): Observation node replacing the network's measurement node.
        simulation_model (ModelKind): Line model of the fault simulation.
        output (str): Error-table CSV path.
        comparison_output (str): EMTC vs TDOA comparison CSV path.
    """
    network: str
    database: Optional[str] = None
    spacing: float = 10.0
    excitation: str = 'lightning'
    conditions: List[ScenarioCondition] = Field(default_factory=list)
    fault_types: List[FaultType] = Field(default_factory=list)
    positions: List[ScenarioPosition]
    angles: List[float] = Field(default_factory=lambda: [90.0])
    impedances: List[float] = Field(default_factory=lambda: [10.0])
    ground_resistivities: List[float] = Field(default_factory=lambda: [1000.0])
    mode: Literal['naive', 'aerial'] = 'aerial'
    far_node: Optional[str] = None
    measurement: Optional[str] = None
    simulation_model: ModelKind = 'frequency_dependent'
    grid: ScenarioGrid = ScenarioGrid()
    output: str = 'sweep.csv'
    comparison_output: str = 'comparison.csv'

    @model_validator(mode='after')
    def validate_axes(self):
        axes = ['positions', 'ground_resistivities']
        if not self.conditions:
            axes += ['fault_types', 'angles', 'impedances']
        for name in axes:
            if not getattr(self, name):
                raise ValueError(f"scenario axis '{name}' must not be empty")
        return self

    def fault_conditions(self) -> List[ScenarioCondition]:
        if self.conditions:
            return list(self.conditions)
        return [ScenarioCondition(fault_type=fault_type, angle=angle, impedance=impedance)
                for fault_type in self.fault_types for angle in self.angles for impedance in self.impedances]


class NetworkSummary(FrozenModel):
    nodes: int
    segments: int
    gfl_count: int
    digest: str
    total_length: float


class VelocityRow(FrozenModel):
    resistivity: float
    frequency: float
    velocity: float


class EnergyRatioResponse(FrozenModel):
    fault_distance: float
    multiple: float
    ratio: float


class ExcitationDescriptor(FrozenModel):
    kind: Literal['lightning', 'rect']
    amplitude: float = 10e3
    alpha: float = 20e-6
    beta: float = 3e-6
    width: float = 1e-6

    def label(self) -> str:
        if self.kind == 'lightning':
            return f"lightning:A={self.amplitude:g},alpha={self.alpha:g},beta={self.beta:g}"
        return f"rect:A={self.amplitude:g},width={self.width:g}"


class ModeName(str, Enum):
    MODE0 = 'mode0'
    ALPHA = 'alpha'
    BETA = 'beta'
    RAW = 'raw'

    @property
    def code(self) -> int:
        return list(ModeName).index(self)

    @classmethod
    def from_code(cls, code: int) -> "ModeName":
        return list(cls)[code]


