"""
Pydantic models for the pipeline description
"""
from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, WithJsonSchema, model_validator


def _to_fraction(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        result = value
    elif isinstance(value, bool):
        raise ValueError("temporal factor must be a number or 'p/q' string")
    elif isinstance(value, (int, str)):
        result = Fraction(value)
    elif isinstance(value, float):
        result = Fraction(repr(value))
    else:
        raise ValueError("temporal factor must be a number or 'p/q' string")
    if result <= 0:
        raise ValueError("temporal factor must be positive")
    return result


Rational = Annotated[
    Fraction,
    BeforeValidator(_to_fraction),
    PlainSerializer(lambda f: str(f), return_type=str),
    WithJsonSchema({"type": "string", "examples": ["1/4"]}),
]

BlockKind = Literal["Conv1D", "RConvStack", "SeparationHead"]

TEMPORAL_FACTORS = (Fraction(1), Fraction(1, 4), Fraction(1, 16))


class BlockSpec(BaseModel):
    """One operation block (one row of the layer table)"""
    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    id: int = Field(..., ge=0)
    name: str
    kind: BlockKind
    in_channels: int = Field(..., ge=1)
    out_channels: int = Field(..., ge=1)
    temporal_factor: Rational = Fraction(1)
    repeat: int = Field(1, ge=1)
    kernel_lengths: List[int] = Field(default_factory=lambda: [1], min_length=1)
    stride: int = Field(1, ge=1)
    expansion: int = Field(4, ge=1)  # 1D-R-Conv only
    normalize: bool = True  # ReLU + LayerNorm after a Conv1D
    feature_dim: int = Field(256, ge=1)  # SeparationHead only

    @model_validator(mode="after")
    def _check_structure(self):
        if any(k < 1 for k in self.kernel_lengths):
            raise ValueError("kernel_lengths must be positive")
        if self.kind == "SeparationHead":
            if self.stride != 1 or self.temporal_factor != 1:
                raise ValueError("SeparationHead has no temporal stride")
            return self
        if self.temporal_factor not in TEMPORAL_FACTORS:
            raise ValueError(
                f"temporal_factor {self.temporal_factor} is not one of "
                + ", ".join(str(f) for f in TEMPORAL_FACTORS)
            )
        if self.temporal_factor != Fraction(1, self.stride):
            raise ValueError(
                f"temporal_factor {self.temporal_factor} does not match stride {self.stride}"
            )
        if self.kind == "Conv1D" and len(self.kernel_lengths) != 1:
            raise ValueError("Conv1D takes exactly one kernel length")
        if self.kind == "RConvStack":
            paths = len(self.kernel_lengths)
            if (self.expansion * self.in_channels) % paths or (self.expansion * self.out_channels) % paths:
                raise ValueError("expanded channels must split evenly across the paths")
        return self


class PipelineSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "custom"
    blocks: List[BlockSpec] = Field(default_factory=list)
    input_channels: int = Field(1, ge=1)
    element_bytes: int = Field(4, ge=1)

    @model_validator(mode="after")
    def _check_chain(self):
        channels = self.input_channels
        for position, block in enumerate(self.blocks):
            if block.id != position:
                raise ValueError(f"block '{block.name}' has id {block.id}, expected {position}")
            if block.in_channels != channels:
                raise ValueError(
                    f"block '{block.name}' consumes {block.in_channels} channels, "
                    f"previous output has {channels}"
                )
            if block.kind == "SeparationHead" and position != len(self.blocks) - 1:
                raise ValueError("SeparationHead must be the last block")
            channels = block.out_channels
        return self

    def index_of(self, name: str) -> int:
        for block in self.blocks:
            if block.name == name:
                return block.id
        raise KeyError(name)


class TensorShape(BaseModel):
    model_config = ConfigDict(frozen=True)

    channels: int = Field(..., ge=1)
    frames: int = Field(..., ge=1)

    @property
    def elements(self) -> int:
        return self.channels * self.frames


class BlockCost(BaseModel):
    name: str
    group: str
    params: int = Field(..., ge=0)
    macs: int = Field(..., ge=0)


class GroupCost(BaseModel):
    params: int = 0
    macs: int = 0


class CostReport(BaseModel):
    per_block: List[BlockCost] = Field(default_factory=list)
    groups: Dict[str, GroupCost] = Field(default_factory=dict)

    @property
    def total_params(self) -> int:
        return sum(b.params for b in self.per_block)

    @property
    def total_macs(self) -> int:
        return sum(b.macs for b in self.per_block)


class UnitSpec(BaseModel):
    """Channel/stride layout of one 1D-R-Conv unit inside a stack"""
    model_config = ConfigDict(frozen=True)

    in_channels: int
    out_channels: int
    stride: int
    expansion: int
    kernel_lengths: List[int]

    @property
    def expanded(self) -> int:
        return self.expansion * self.in_channels

    @property
    def path_channels(self) -> int:
        return self.expanded // len(self.kernel_lengths)

    @property
    def residual(self) -> bool:
        return self.stride == 1 and self.in_channels == self.out_channels
