"""
Pydantic models for partition plans
"""
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import List, Tuple

from app.api.modules.pipeline.models import Rational


class PartitionPlan(BaseModel):
    """Contiguous block intervals (VNFs) and the chain node hosting each one.

    Intervals are inclusive (first, last) block indices; theoretical_rates holds
    the filter rate of the last block of every VNF.
    """
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    pipeline: str = "canonical"
    m: int = Field(..., ge=1)
    chain: List[str] = Field(..., min_length=1)
    vnfs: List[Tuple[int, int]] = Field(..., min_length=1)
    placements: List[str]
    theoretical_rates: List[Rational]

    @model_validator(mode="after")
    def _check_intervals(self):
        if not (len(self.vnfs) == len(self.placements) == len(self.theoretical_rates)):
            raise ValueError("vnfs, placements and theoretical_rates must have the same length")
        expected = 0
        for first, last in self.vnfs:
            if first != expected or last < first:
                raise ValueError(f"interval ({first}, {last}) breaks contiguity; expected to start at {expected}")
            expected = last + 1
        position = 0
        for node in self.placements:
            if node not in self.chain:
                raise ValueError(f"placement '{node}' is not on the chain")
            index = self.chain.index(node)
            if index < position:
                raise ValueError(f"placement '{node}' goes back along the chain")
            position = index
        return self

    @property
    def block_count(self) -> int:
        return self.vnfs[-1][1] + 1

    def vnf_names(self) -> List[str]:
        return [f"VNF{i + 1}" for i in range(len(self.vnfs))]

    def hosted_by(self, node: str) -> List[int]:
        """Indices of the VNFs a node runs"""
        return [i for i, placed in enumerate(self.placements) if placed == node]


class PlanRequest(BaseModel):
    preset: str = "canonical"
    m: int = Field(163840, ge=1)
    chain: List[str] = Field(default_factory=lambda: ["client", "s1", "s2"])
