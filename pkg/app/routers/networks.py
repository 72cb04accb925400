from fastapi import APIRouter, HTTPException, File, Query, UploadFile

# Own imports
from app.config import DEFAULT_SPACING
from app.core.network import enumerate_gfls, network_digest, parse_network
from app.database.schemas import NetworkSummary
from app.utils.errors import EmtcError, status_code_for
from app.utils.functions import read_upload

router = APIRouter()


@router.post("/validate", response_model=NetworkSummary,
             description="Validate a network config and summarize it.")
async def validate_network_config(
        config: UploadFile = File(..., description="Network config JSON"),
        spacing: float = Query(DEFAULT_SPACING, gt=0, description="GFL spacing in meters")
):
    """
    Parses and validates an uploaded network config.

    Args:
        config (UploadFile): The network config document.
        spacing (float): GFL spacing used for the GFL count.

    Returns:
        NetworkSummary: Node, segment and GFL counts plus the network digest.

    Raises:
        HTTPException: 400 if the config is malformed or the network is invalid.
    """
    try:
        net = parse_network(await read_upload(config))
        gfls = enumerate_gfls(net, spacing)
    except EmtcError as e:
        raise HTTPException(status_code=status_code_for(e), detail=str(e))

    return NetworkSummary(nodes=len(net.nodes),
                          segments=len(net.segments),
                          gfl_count=len(gfls),
                          digest=f"{network_digest(net):016x}",
                          total_length=sum(segment.length for segment in net.segments))
