"""
Pydantic models for chain scenarios and latency reports
"""
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import Dict, List, Literal, Optional

from app.api.modules.pipeline.models import Rational
from app.api.modules.planner.models import PartitionPlan

Mode = Literal["SF", "CF"]


class LinkSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    bandwidth: float = Field(10e6, gt=0, description="bits per second")
    prop_delay: float = Field(0.15, ge=0, description="seconds")


class NodeSpec(BaseModel):
    """A chain node; the overheads model emulator costs the raw link physics omits"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    id: str
    compute_rate: float = Field(9.07e9, gt=0, description="MACs per second")
    cf_io_overhead: float = Field(0.0, ge=0, description="seconds per hosted VNF in CF mode")
    per_packet_overhead: float = Field(0.0, ge=0, description="seconds per packet emitted or forwarded")
    per_message_overhead: float = Field(0.0, ge=0, description="seconds before emitting a new message")


class PacketizationSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    mtu_payload: int = Field(1472, gt=0)
    header_bytes: int = Field(28, ge=0)


class JitterSpec(BaseModel):
    """Log-normal multiplicative noise per node and run"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    compute_sigma: float = Field(0.0, ge=0)
    io_sigma: float = Field(0.0, ge=0)
    seed: int = Field(0, ge=0)

    @property
    def enabled(self) -> bool:
        return self.compute_sigma > 0 or self.io_sigma > 0


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    name: str = "scenario"
    mode: Mode = "SF"
    chain: List[NodeSpec] = Field(..., min_length=2)
    links: List[LinkSpec]
    packetization: PacketizationSpec = PacketizationSpec()
    pipeline: str = "canonical"
    m: int = Field(163840, ge=1)
    seed: int = Field(0, ge=0)
    input_seed: int = Field(0, ge=0)
    input_path: Optional[str] = None
    plan: Optional[PartitionPlan] = None
    repetitions: int = Field(1, ge=1)
    jitter: JitterSpec = JitterSpec()
    execute: bool = True

    @model_validator(mode="after")
    def _check_topology(self):
        if len(self.links) != len(self.chain) - 1:
            raise ValueError(f"{len(self.chain)} nodes need {len(self.chain) - 1} links, got {len(self.links)}")
        ids = [node.id for node in self.chain]
        if len(set(ids)) != len(ids):
            raise ValueError(f"node ids must be unique, got {ids}")
        return self

    @property
    def node_ids(self) -> List[str]:
        return [node.id for node in self.chain]

    def link_names(self) -> List[str]:
        ids = self.node_ids
        return [f"{a}->{b}" for a, b in zip(ids, ids[1:])]


class GridSpec(BaseModel):
    """Every scenario is repeated for each bandwidth x compute-rate pair"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    bandwidths: List[float] = Field(..., min_length=1)
    compute_rates: List[float] = Field(..., min_length=1)


class ScenarioSuite(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    description: str = ""
    scenarios: List[Scenario] = Field(..., min_length=1)
    grid: Optional[GridSpec] = None


# ======================================
# Reports
# ======================================

class RunRecord(BaseModel):
    run: int
    t_p: float
    t_t: float
    t_s: float


class Percentiles(BaseModel):
    p5: float
    p25: float
    p50: float
    p75: float
    p95: float
    mean: float


class LinkTraffic(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    link: str
    bytes: int
    packets: int
    theoretical_rate: Rational


class LatencyReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    scenario: str
    mode: Mode
    pipeline: str
    m: int
    plan: Optional[PartitionPlan] = None
    links: List[LinkTraffic]
    baseline_bytes: Optional[int] = Field(None, description="first-link bytes of the same input sent raw")
    feature_digest: Optional[str] = None
    boundary_digests: List[str] = Field(default_factory=list)
    runs: List[RunRecord]
    summary: Dict[str, Percentiles]

    def median(self, metric: str = "t_s") -> float:
        return self.summary[metric].p50


class SuiteReport(BaseModel):
    suite: str
    reports: List[LatencyReport]

    def by_name(self) -> Dict[str, LatencyReport]:
        return {report.scenario: report for report in self.reports}
