"""
API routes for chain simulation
"""
from fastapi import APIRouter, HTTPException
import logging

from app.core.errors import ConfigError, ValidationFailure
from .models import LatencyReport, Scenario
from .service import NetsimService, measured_rates

logger = logging.getLogger(__name__)


def create_api_router():
    router = APIRouter(prefix="/api/netsim", tags=["netsim"])
    service = NetsimService()

    @router.get("/scenarios")
    async def list_scenarios():
        """Bundled scenario suites"""
        return service.bundled_suites()

    @router.post("/simulate", response_model=LatencyReport)
    async def run_scenario(scenario: Scenario):
        """Simulate one scenario and return its latency report"""
        try:
            return service.simulate(scenario)
        except ConfigError as e:
            raise HTTPException(status_code=400, detail=str(e))
        except ValidationFailure as e:
            raise HTTPException(status_code=422, detail=str(e))
        except Exception as e:
            logger.error(f"Simulation failed: {e}", exc_info=True)
            raise HTTPException(status_code=500, detail=f"Simulation failed: {str(e)}")

    @router.post("/rates")
    async def link_rates(report: LatencyReport):
        """Measured per-link filter rates of a finished report"""
        try:
            rates = measured_rates(report)
        except ValidationFailure as e:
            raise HTTPException(status_code=422, detail=str(e))
        return [
            {"link": link.link, "measured": float(rate), "theoretical": float(link.theoretical_rate)}
            for link, rate in zip(report.links, rates)
        ]

    return router
