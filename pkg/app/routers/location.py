import os
from typing import Optional

from fastapi import APIRouter, HTTPException, File, Form, UploadFile
from fastapi.concurrency import run_in_threadpool

# Own imports
from app.config import DATABASES_FOLDER
from app.core.locator import locate
from app.database.crud import envelope_digest, envelope_to_phases, location_response, parse_measurement
from app.database.gfl_db import GflDatabase
from app.database.schemas import FaultType, LocationResponse, ModeName
from app.utils.errors import EmtcError, ParameterError, status_code_for
from app.utils.functions import read_file, read_upload

router = APIRouter()


def database_path(name: str) -> str:
    """Path of a database stored in the databases folder, addressed by bare file name."""
    if not name or name in ('.', '..') or os.path.basename(name) != name:
        raise ParameterError(f"database name '{name}' must be a bare file name")
    return os.path.join(DATABASES_FOLDER, name)


@router.post("/locate", response_model=LocationResponse, response_model_exclude_none=True,
             description="Locate a fault from an uploaded measurement against a stored GFL database.")
async def locate_fault(
        database: str = Form(..., description="File name of a GFL database in the databases folder"),
        measurement: UploadFile = File(..., description="Measurement envelope (.json) or CSV (time_s,a,b,c)"),
        mode: str = Form('aerial', description="naive or aerial"),
        fault_type: Optional[FaultType] = Form(None, description="Skip fault-type recognition"),
        aerial_mode: Optional[ModeName] = Form(None, description="Force the alpha or beta mode"),
        include_curve: bool = Form(False, description="Return the normalized CSE curve")
):
    """
    Runs the convolution-energy ranking for one measurement.

    Args:
        database (str): GFL database file name inside the databases folder.
        measurement (UploadFile): The measured transient.
        mode (str): Location variant.
        fault_type (Optional[FaultType]): Known fault type.
        aerial_mode (Optional[ModeName]): Aerial mode override.
        include_curve (bool): Whether to attach the CSE curve.

    Returns:
        LocationResponse: Predicted segment and position, with the error when the envelope carries the truth.

    Raises:
        HTTPException: 400 for malformed input, 409 for an incompatible database, 422 when location fails.
    """
    try:
        db = GflDatabase.from_bytes(await read_file(database_path(database)))
        envelope = parse_measurement(await read_upload(measurement), measurement.filename or 'measurement.json')
        result = await run_in_threadpool(locate, db, envelope_to_phases(envelope), mode, fault_type,
                                         aerial_mode, envelope_digest(envelope))
    except EmtcError as e:
        raise HTTPException(status_code=status_code_for(e), detail=str(e))

    return location_response(result, envelope, include_curve=include_curve)
