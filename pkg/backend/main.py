"""
Main FastAPI application entry point
HTTP surface over the same controller the command line uses
"""
import math

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import ValidationError
import uvicorn

try:  # Support running both as a package (backend.*) and from backend/ directly
    from config import Config
except ImportError:  # When imported as backend.main
    from backend.config import Config
from routes.gw_routes import router as gw_router
from exceptions import GwModelError
from middleware.access_logging import AccessLoggingMiddleware

VERSION = "1.0.0"

# Startup logging
print("=" * 50)
print("🚀 Starting GW Modelling API")
print("=" * 50)
print(f"📊 Configuration:")
print(f"   ENVIRONMENT: {Config.ENVIRONMENT}")
print(f"   PORT: {Config.PORT}")
print(f"   THREADS: {Config.THREADS}")
print(f"   MCD: alpha={Config.MCD_ALPHA}, seed={Config.MCD_SEED}")
print("=" * 50)


# Initialize FastAPI app
app = FastAPI(
    title="GW Modelling API",
    version=VERSION,
    description="Geographically weighted summary statistics, PCA, regression and collinearity diagnostics"
)

# Configure CORS
print(f"🌐 CORS Configuration:")
print(f"   Allowed Origins: {Config.ALLOWED_ORIGINS}")
app.add_middleware(
    CORSMiddleware,
    allow_origins=Config.ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.add_middleware(AccessLoggingMiddleware)
print("✅ Access logging middleware enabled")


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, dict):
        return {key: _json_safe(item) for key, item in value.items()}
    return value


@app.exception_handler(GwModelError)
async def gw_model_error_handler(_request: Request, exc: GwModelError):
    return JSONResponse(
        status_code=exc.status_code,
        content={
            **_json_safe(exc.details),
            "detail": exc.message,
            "code": exc.code,
        },
    )


@app.exception_handler(ValidationError)
async def run_config_error_handler(_request: Request, exc: ValidationError):
    return JSONResponse(
        status_code=422,
        content={
            "detail": "; ".join(
                f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}" for error in exc.errors()
            ),
            "code": "validation_error",
        },
    )

# Include routers
app.include_router(gw_router)


@app.get("/")
async def root():
    """Health check endpoint"""
    return {
        "message": "GW Modelling API is running!",
        "version": VERSION,
        "status": "healthy"
    }


@app.get("/health")
async def health_check():
    """Detailed health check endpoint"""
    return {
        "status": "healthy",
        "service": "GW Modelling",
        "version": VERSION
    }


if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=Config.PORT)
