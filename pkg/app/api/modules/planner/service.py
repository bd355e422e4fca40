"""
Filter-rate driven partitioning of a pipeline into VNFs over a hop chain
"""
import logging
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from app.core.errors import EmptyChain, PlanChainMismatch
from app.core.io import load_model, write_json
from app.api.modules.pipeline.models import PipelineSpec
from app.api.modules.pipeline.service import RATE_COLUMNS, PipelineService, filter_rates
from app.api.modules.tensor_exec.codec import deserialize
from app.api.modules.tensor_exec.models import Tensor, WeightSet
from app.api.modules.tensor_exec.service import run_partitioned
from .models import PartitionPlan

logger = logging.getLogger(__name__)

Interval = Tuple[int, int]

RATE_TABLE_COLUMNS = RATE_COLUMNS + ["concave"]


# ======================================
# Cut selection
# ======================================

def concave_points(rates: Sequence[Fraction]) -> List[int]:
    """Strict interior local minima; endpoints and plateaus never qualify"""
    return [
        i for i in range(1, len(rates) - 1)
        if rates[i - 1] > rates[i] < rates[i + 1]
    ]


def searchable_rates(spec: PipelineSpec, rates: List[Fraction]) -> List[Fraction]:
    """The separation head always closes the last VNF"""
    if spec.blocks and spec.blocks[-1].kind == "SeparationHead":
        return rates[:-1]
    return rates


def select_cuts(rates: Sequence[Fraction], node_count: int) -> List[int]:
    """Blocks to split after: the concave points, at most node_count - 1, earliest first"""
    cuts = concave_points(rates)
    if len(cuts) + 1 > node_count:
        kept = cuts[:max(node_count - 1, 0)]
        logger.warning(
            f"{len(cuts)} concave points but {node_count} processing nodes; "
            f"keeping splits after blocks {kept}, merging the rest into the last VNF"
        )
        return kept
    return cuts


def split_intervals(block_count: int, cuts: Sequence[int]) -> List[Interval]:
    """Inclusive intervals ending after each cut, then a trailing interval"""
    intervals = []
    first = 0
    for cut in cuts:
        intervals.append((first, cut))
        first = cut + 1
    if first < block_count:
        intervals.append((first, block_count - 1))
    return intervals


def place(intervals: Sequence[Interval], chain: Sequence[str]) -> List[str]:
    """Earlier VNFs take the chain in order; the last VNF goes to the last node"""
    placements = [chain[i] for i in range(len(intervals) - 1)]
    placements.append(chain[-1])
    return placements


# ======================================
# Service
# ======================================

class PlannerService:
    """Service class for split planning and partition plan documents"""

    def __init__(self):
        self.pipelines = PipelineService()

    def make_plan(self, spec: PipelineSpec, m: int, chain: Sequence[str]) -> PartitionPlan:
        if not chain:
            raise EmptyChain("a plan needs at least one processing node")
        chain = list(chain)
        rates = filter_rates(spec, m)
        if not rates:
            raise EmptyChain(f"pipeline '{spec.name}' has no blocks to place")

        cuts = select_cuts(searchable_rates(spec, rates), len(chain))
        intervals = split_intervals(len(spec.blocks), cuts)
        plan = PartitionPlan(
            pipeline=spec.name,
            m=m,
            chain=chain,
            vnfs=intervals,
            placements=place(intervals, chain),
            theoretical_rates=[rates[last] for _, last in intervals],
        )
        logger.info(
            f"Planned '{spec.name}' at m={m}: "
            + ", ".join(f"{name} {first}..{last} on {node}"
                        for name, (first, last), node in zip(plan.vnf_names(), plan.vnfs, plan.placements))
        )
        return plan

    def rate_table(self, spec: PipelineSpec, m: int) -> List[Dict[str, Any]]:
        """Per-block rate rows, flagging the concave points"""
        cuts = set(concave_points(searchable_rates(spec, filter_rates(spec, m))))
        return [dict(row, concave=index in cuts) for index, row in enumerate(self.pipelines.rate_table(spec, m))]

    def validate_plan(
        self,
        plan: PartitionPlan,
        spec: PipelineSpec,
        chain: Optional[Sequence[str]] = None,
    ) -> PartitionPlan:
        """Check that a plan covers the pipeline and runs forward along the chain"""
        if plan.block_count != len(spec.blocks):
            raise PlanChainMismatch(
                f"plan covers {plan.block_count} blocks, pipeline '{spec.name}' has {len(spec.blocks)}"
            )
        chain = list(plan.chain if chain is None else chain)
        position = 0
        for name, node in zip(plan.vnf_names(), plan.placements):
            if node not in chain:
                raise PlanChainMismatch(f"{name} is placed on '{node}', which is not on the chain {chain}")
            index = chain.index(node)
            if index < position:
                raise PlanChainMismatch(f"{name} on '{node}' would send data back along the chain")
            position = index
        return plan

    def load_plan(self, path: Union[str, Path]) -> PartitionPlan:
        return load_model(PartitionPlan, path)

    def dump_plan(self, plan: PartitionPlan, path: Union[str, Path]) -> Path:
        return write_json(path, plan)

    def run_plan(
        self,
        spec: PipelineSpec,
        weights: WeightSet,
        tensor: Tensor,
        plan: PartitionPlan,
    ) -> Tuple[Tensor, List[Tensor]]:
        """Run every VNF across a serialize/deserialize boundary.

        Returns the final tensor and the tensor leaving each VNF.
        """
        self.validate_plan(plan, spec)
        features, messages = run_partitioned(spec, weights, tensor, plan.vnfs)
        return features, [deserialize(message) for message in messages]
