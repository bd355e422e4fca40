"""
API routes for pipeline execution
"""
from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field
from typing import Dict, List, Optional
import logging

from app.config import DEFAULT_SEED
from app.core.errors import ConfigError, ValidationFailure
from app.api.modules.pipeline.service import PipelineService
from app.api.modules.scoring.service import synth_mixture
from .codec import digest
from .service import InferenceService

logger = logging.getLogger(__name__)


class InferRequest(BaseModel):
    pipeline: str = "canonical"
    m: int = Field(16384, ge=1)
    seed: int = Field(DEFAULT_SEED, ge=0)
    input_seed: int = Field(DEFAULT_SEED, ge=0)
    n_sources: int = Field(4, ge=1)


class InferResponse(BaseModel):
    shape: List[int]
    features_digest: str
    block_digests: Dict[str, str]
    features: Optional[List[List[float]]] = None


def create_api_router():
    router = APIRouter(prefix="/api/tensor", tags=["tensor"])
    pipelines = PipelineService()
    service = InferenceService()

    @router.post("/infer", response_model=InferResponse)
    async def infer(request: InferRequest, include_features: bool = False):
        """Run a preset on a synthetic mixture and return per-block digests"""
        try:
            spec = pipelines.load(request.pipeline)
            _, observation = synth_mixture(request.n_sources, request.m, request.input_seed)
            result = service.run(spec, observation, request.seed)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        except ValidationFailure as e:
            raise HTTPException(status_code=422, detail=str(e))
        except Exception as e:
            logger.error(f"Inference failed: {e}", exc_info=True)
            raise HTTPException(status_code=500, detail=f"Inference failed: {str(e)}")

        features = result.features
        return InferResponse(
            shape=list(features.data.shape),
            features_digest=digest(features),
            block_digests=result.block_digests,
            features=features.data.tolist() if include_features else None,
        )

    return router
