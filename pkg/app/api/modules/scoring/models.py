"""
Pydantic models for anomaly scoring
"""
from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional

Label = Literal["normal", "anomalous"]
Metric = Literal["euclidean", "cosine"]


class LabeledScore(BaseModel):
    model_config = ConfigDict(extra="forbid")

    score: float = Field(..., ge=0)
    label: Label
    machine: Optional[int] = None


class AucRequest(BaseModel):
    samples: List[LabeledScore]


class ThresholdRequest(BaseModel):
    scores: List[float]
    threshold: float


class MachineResult(BaseModel):
    machine: int
    auc: float
    normal: int
    anomalous: int


class EvaluationSummary(BaseModel):
    """Outcome of a synthetic labeled evaluation"""
    pipeline: str
    m: int
    seed: int
    metric: Metric
    clips_per_label: int
    per_machine: List[MachineResult]
    mauc: float
    samples: List[LabeledScore] = Field(default_factory=list, exclude=True)
