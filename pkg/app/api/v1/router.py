"""
Main API router for v1 endpoints
Contains core API endpoints that are not part of feature modules
"""
from fastapi import APIRouter
import logging

from app.config import DEFAULT_M, DEFAULT_SEED
from app.api.modules.pipeline.service import PipelineService
from app.api.modules.netsim.service import NetsimService

logger = logging.getLogger(__name__)

api_router = APIRouter(prefix="/api")


@api_router.get("/")
async def root():
    return {"message": "IA-Net-Lite API - split inference over SF/CF chains"}


@api_router.get("/health")
async def health():
    return {"status": "ok"}


@api_router.get("/presets")
async def presets():
    """Bundled pipelines and scenario suites, with the run defaults"""
    return {
        "pipelines": PipelineService().preset_names(),
        "scenarios": NetsimService().bundled_suites(),
        "defaults": {"m": DEFAULT_M, "seed": DEFAULT_SEED},
    }
