"""
API routes for the split planner
"""
from fastapi import APIRouter, HTTPException
import logging

from app.core.errors import ConfigError
from .models import PartitionPlan, PlanRequest
from .service import PlannerService

logger = logging.getLogger(__name__)


def create_api_router():
    router = APIRouter(prefix="/api/planner", tags=["planner"])
    service = PlannerService()

    @router.post("/plan", response_model=PartitionPlan)
    async def plan(request: PlanRequest):
        """Split a preset at its concave points and place the VNFs on the chain"""
        spec = service.pipelines.get_preset(request.preset)
        if spec is None:
            raise HTTPException(status_code=404, detail=f"Unknown preset '{request.preset}'")
        try:
            return service.make_plan(spec, request.m, request.chain)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        except Exception as e:
            logger.error(f"Planning failed: {e}", exc_info=True)
            raise HTTPException(status_code=500, detail=f"Planning failed: {str(e)}")

    return router
