"""
FastAPI application entry point
Exposes the pipeline, executor, planner, simulator and scoring modules over HTTP.
"""
import logging
from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.config import LOG_FORMAT, LOG_LEVEL
from app.api.v1.router import api_router
from app.api.modules.pipeline.api_routes import create_api_router as create_pipeline_router
from app.api.modules.tensor_exec.api_routes import create_api_router as create_tensor_router
from app.api.modules.planner.api_routes import create_api_router as create_planner_router
from app.api.modules.netsim.api_routes import create_api_router as create_netsim_router
from app.api.modules.scoring.api_routes import create_api_router as create_scoring_router

# Configure logging
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger(__name__)

# ======================================
# FastAPI App Creation
# ======================================
app = FastAPI(
    title="IA-Net-Lite API",
    description="Separation pipeline, split planning and SF/CF chain simulation",
    version="1.0.0",
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=False,
    allow_methods=["*"],
    allow_headers=["*"],
)


# ======================================
# Root Route
# ======================================
@app.get("/")
async def root():
    routes = [
        {"path": route.path, "methods": sorted(route.methods) if route.methods else []}
        for route in app.routes
        if hasattr(route, "path") and hasattr(route, "methods")
    ]
    return {
        "message": "IA-Net-Lite API Server",
        "version": "1.0.0",
        "endpoints": {
            "pipeline": "/api/pipeline",
            "tensor": "/api/tensor",
            "planner": "/api/planner",
            "netsim": "/api/netsim",
            "scoring": "/api/scoring",
        },
        "registered_routes": routes,
    }


# ======================================
# Register Main API Router
# ======================================
app.include_router(api_router)

# ======================================
# Module Routes
# ======================================
for name, factory in (
    ("pipeline", create_pipeline_router),
    ("tensor_exec", create_tensor_router),
    ("planner", create_planner_router),
    ("netsim", create_netsim_router),
    ("scoring", create_scoring_router),
):
    app.include_router(factory())
    logger.info(f"Included {name} router")
