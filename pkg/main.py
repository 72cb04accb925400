from fastapi import FastAPI
from fastapi.responses import RedirectResponse
from starlette.middleware.cors import CORSMiddleware

# Routers
from app.routers.analysis import router as analysis_router
from app.routers.location import router as location_router
from app.routers.networks import router as networks_router

# Application description
app_description = """
EMTC Fault Location is an HTTP surface over the electromagnetic time-reversal
convolution toolkit. Networks are validated and summarized, stored guessed-fault-location
databases are ranked against uploaded measurements, and the analytic velocity and
energy-ratio tables are served for the shipped example networks.

## Features

- **Networks**: Validate a network config and get its GFL count and digest.
- **Location**: Locate a fault from a measured transient and a pre-calculated database.
- **Analysis**: Wave velocity versus frequency and transfer-function energy ratios.

Pre-calculation, simulation and scenario sweeps run from the command line (`python cli.py --help`).
"""

app = FastAPI(
    title="EMTC Fault Location",
    description=app_description,
    version="1.0.0",
    license_info={
        "name": "MIT License",
        "url": "https://opensource.org/licenses/MIT",
    },
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=['*'],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"]
)

app.include_router(networks_router, prefix="/api/networks", tags=["network operations"])
app.include_router(location_router, prefix="/api/location", tags=["fault location"])
app.include_router(analysis_router, prefix="/api/analysis", tags=["analysis"])


@app.get("/")
async def root():
    """
    Root endpoint that redirects to the API documentation.

    Returns:
        RedirectResponse: Redirects to the '/docs' endpoint.
    """
    return RedirectResponse(url='/docs')
