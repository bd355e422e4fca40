"""
API routes for the pipeline description
"""
from fastapi import APIRouter, HTTPException, Query
from typing import List
import logging

from app.config import DEFAULT_M
from app.core.errors import ConfigError
from .models import CostReport, PipelineSpec, TensorShape
from .service import PipelineService, count_costs, infer_shape

logger = logging.getLogger(__name__)


def create_api_router():
    router = APIRouter(prefix="/api/pipeline", tags=["pipeline"])
    service = PipelineService()

    def _preset(name: str) -> PipelineSpec:
        spec = service.get_preset(name)
        if spec is None:
            raise HTTPException(status_code=404, detail=f"Unknown preset '{name}'")
        return spec

    @router.get("/presets")
    async def list_presets():
        """Preset names with block counts"""
        return [
            {"name": name, "blocks": [b.name for b in service.get_preset(name).blocks]}
            for name in service.preset_names()
        ]

    @router.get("/{preset}", response_model=PipelineSpec)
    async def get_preset(preset: str):
        return _preset(preset)

    @router.get("/{preset}/shapes", response_model=List[TensorShape])
    async def get_shapes(preset: str, m: int = Query(DEFAULT_M, description="Input length")):
        spec = _preset(preset)
        try:
            return infer_shape(spec, m)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))

    @router.get("/{preset}/rates")
    async def get_rates(preset: str, m: int = Query(DEFAULT_M, description="Input length")):
        spec = _preset(preset)
        try:
            return service.rate_table(spec, m)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))

    @router.get("/{preset}/costs", response_model=CostReport)
    async def get_costs(preset: str, m: int = Query(DEFAULT_M, description="Input length")):
        spec = _preset(preset)
        try:
            return count_costs(spec, m)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))

    return router
