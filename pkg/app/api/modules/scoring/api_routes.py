"""
API routes for anomaly scoring
"""
from fastapi import APIRouter, HTTPException
import logging

from app.core.errors import ConfigError, ValidationFailure
from .models import AucRequest, ThresholdRequest
from .service import ScoringService

logger = logging.getLogger(__name__)


def create_api_router():
    router = APIRouter(prefix="/api/scoring", tags=["scoring"])
    service = ScoringService()

    @router.post("/auc")
    async def compute_auc(request: AucRequest):
        """Rank-based AUC of a labeled score list"""
        try:
            return service.auc_summary(request.samples)
        except ValidationFailure as e:
            raise HTTPException(status_code=422, detail=str(e))
        except Exception as e:
            logger.error(f"AUC computation failed: {e}", exc_info=True)
            raise HTTPException(status_code=500, detail=f"AUC computation failed: {str(e)}")

    @router.post("/threshold")
    async def apply_threshold(request: ThresholdRequest):
        try:
            return {"decisions": service.decide(request.scores, request.threshold)}
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))

    return router
