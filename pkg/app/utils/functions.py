import os
import re
from typing import Dict, Tuple

import aiofiles
from fastapi import UploadFile

from app.core.signal import Waveform, lightning_impulse, rectangular_pulse
from app.database.schemas import ExcitationDescriptor
from app.utils.errors import ParameterError

# Accepted unit suffixes per quantity, with their SI scale
UNITS: Dict[str, Dict[str, float]] = {
    'length': {'m': 1.0, 'km': 1e3},
    'voltage': {'V': 1.0, 'kV': 1e3},
    'time': {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'ns': 1e-9},
    'impedance': {'ohm': 1.0, 'kohm': 1e3},
    'resistivity': {'ohmm': 1.0, 'ohm.m': 1.0},
    'angle': {'deg': 1.0},
    'frequency': {'Hz': 1.0, 'kHz': 1e3, 'MHz': 1e6},
}

_QUANTITY = re.compile(r'^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([A-Za-z.]+)\s*$')

EXCITATION_KINDS = ('lightning', 'rect')


def parse_quantity(text: str, kind: str) -> float:
    """
    Parses a number with an explicit unit suffix into SI units.

    Args:
        text (str): Value such as ``40km``, ``0.1us`` or ``10ohm``.
        kind (str): Quantity name, a key of ``UNITS``.

    Returns:
        float: The value in SI base units.

    Raises:
        ParameterError: Missing or unknown suffix, or a malformed number.
    """
    units = UNITS[kind]
    match = _QUANTITY.match(str(text))
    if match is None:
        raise ParameterError(f"'{text}' is not a {kind} with a unit suffix ({', '.join(units)})")
    value, suffix = match.groups()
    if suffix not in units:
        raise ParameterError(f"unknown {kind} unit '{suffix}' in '{text}' (expected one of {', '.join(units)})")
    return float(value) * units[suffix]


def parse_excitation(spec: str) -> ExcitationDescriptor:
    """
    Parses ``kind[:key=value,...]`` excitation specs, e.g. ``lightning`` or ``rect:width=1e-6``.

    Raises:
        ParameterError: Unknown excitation kind or parameter.
    """
    kind, _, arguments = spec.partition(':')
    kind = kind.strip()
    if kind not in EXCITATION_KINDS:
        raise ParameterError(f"unknown excitation '{kind}', expected one of {', '.join(EXCITATION_KINDS)}")
    values = {}
    for item in filter(None, (part.strip() for part in arguments.split(','))):
        key, _, value = item.partition('=')
        key = {'A': 'amplitude'}.get(key.strip(), key.strip())
        try:
            values[key] = float(value)
        except ValueError:
            raise ParameterError(f"excitation parameter '{item}' is not key=number")
    try:
        return ExcitationDescriptor(kind=kind, **values)
    except ValueError as e:
        raise ParameterError(f"invalid excitation '{spec}': {e}") from e


def build_excitation(descriptor: ExcitationDescriptor, dt: float, duration: float) -> Waveform:
    if descriptor.kind == 'lightning':
        return lightning_impulse(dt, duration, descriptor.amplitude, descriptor.alpha, descriptor.beta)
    return rectangular_pulse(dt, duration, descriptor.amplitude, descriptor.width)


def split_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(',') if item.strip())


async def read_file(path: str) -> bytes:
    """
    Asynchronously reads a whole file.

    Raises:
        ParameterError: The file does not exist.
    """
    if not os.path.isfile(path):
        raise ParameterError(f"file not found: {path}")
    async with aiofiles.open(path, 'rb') as source:
        return await source.read()


async def read_upload(upload_file: UploadFile) -> bytes:
    chunks = []
    while content := await upload_file.read(1024 * 1024):
        chunks.append(content)
    return b''.join(chunks)
