import os
from typing import List, Optional

from fastapi import APIRouter, HTTPException, Query

# Own imports
from app.config import CONFIGS_FOLDER
from app.core.analysis import energy_ratio, terminal_reflection
from app.core.linemodel import network_modes, velocity_curve
from app.core.network import load_network, with_ground
from app.database.schemas import EnergyRatioResponse, NetworkSpec, VelocityRow
from app.utils.errors import EmtcError, ParameterError, status_code_for

router = APIRouter()


def shipped_network(name: str, resistivity: Optional[float] = None) -> NetworkSpec:
    """Loads a config from the shipped configs folder by file name."""
    if os.path.basename(name) != name:
        raise ParameterError(f"config name '{name}' must not contain a path")
    net = load_network(os.path.join(CONFIGS_FOLDER, name if name.endswith('.json') else f"{name}.json"))
    return net if resistivity is None else with_ground(net, resistivity)


@router.get("/velocity", response_model=List[VelocityRow],
            description="Wave velocity of a shipped network's line for several ground resistivities.")
async def get_velocity(
        network: str = Query('single_20km', description="Shipped config name"),
        resistivity: List[float] = Query([10.0, 100.0, 1000.0], description="Ground resistivities in ohm-meters"),
        f_min: float = Query(1e3, gt=0, description="Lowest frequency in Hz"),
        f_max: float = Query(1e7, gt=0, description="Highest frequency in Hz"),
        points: int = Query(50, ge=2, le=1000, description="Log-spaced frequencies")
):
    """
    Returns:
        List[VelocityRow]: One row per resistivity and frequency.

    Raises:
        HTTPException: 400 for an unknown config or bad range.
    """
    try:
        rows = []
        for rho in resistivity:
            net = shipped_network(network, rho)
            model = network_modes(net.geometry, net.ground, 'frequency_dependent')[0]
            rows.extend(VelocityRow(resistivity=rho, frequency=f, velocity=v)
                        for f, v in velocity_curve(model, f_min, f_max, points))
    except EmtcError as e:
        raise HTTPException(status_code=status_code_for(e), detail=str(e))
    return rows


@router.get("/energy-ratio", response_model=EnergyRatioResponse,
            description="Share of the terminal transfer energy below a multiple of its fundamental frequency.")
async def get_energy_ratio(
        network: str = Query('single_20km', description="Shipped config name"),
        fault_distance: float = Query(10e3, gt=0, description="Fault distance in meters"),
        multiple: float = Query(20.0, gt=0, description="Frequency multiple m"),
        resistivity: Optional[float] = Query(None, gt=0, description="Ground resistivity override in ohm-meters"),
        f_nyquist: float = Query(5e6, gt=0, description="Upper integration limit in Hz")
):
    try:
        net = shipped_network(network, resistivity)
        model = network_modes(net.geometry, net.ground, 'frequency_dependent')[0]
        ratio = energy_ratio(fault_distance, terminal_reflection(net), model, multiple, f_nyquist)
    except EmtcError as e:
        raise HTTPException(status_code=status_code_for(e), detail=str(e))
    return EnergyRatioResponse(fault_distance=fault_distance, multiple=multiple, ratio=ratio)
