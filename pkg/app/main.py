from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app import __version__
from app.config import settings
from app.routes import witness
from app.utils.errors import WitnessKitError
from app.utils.logger import logger

app = FastAPI(
    title="witnesskit API",
    description="Skew-symmetric entanglement witnesses, PPT state families and their numerical certification",
    version=__version__,
)

# Allow CORS
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(WitnessKitError)
async def witnesskit_error_handler(request: Request, exc: WitnessKitError):
    logger.error(f"{request.method} {request.url.path} rejected: {str(exc)}")
    return JSONResponse(status_code=422, content={"detail": str(exc)})


app.include_router(witness.router)


@app.get("/")
async def root():
    """Health check endpoint."""
    return {"status": "running", "environment": settings.ENVIRONMENT, "version": __version__}
