"""
Shape calculus, filter rates and Param/MAC accounting for a PipelineSpec.
The calculus is pure over immutable specs; PipelineService resolves presets and documents.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from app.core.errors import IndivisibleInput, MalformedConfig
from app.core.io import load_model, parse_model, write_json
from app.data.presets import BASELINE_PIPELINE, CANONICAL_PIPELINE
from .models import BlockCost, BlockSpec, CostReport, GroupCost, PipelineSpec, TensorShape, UnitSpec

logger = logging.getLogger(__name__)

GROUPS = ("encoder", "abstraction", "decoder")


# ======================================
# Presets
# ======================================

@lru_cache(maxsize=None)
def canonical_pipeline() -> PipelineSpec:
    return parse_model(PipelineSpec, CANONICAL_PIPELINE, source="canonical preset")


@lru_cache(maxsize=None)
def baseline_pipeline() -> PipelineSpec:
    return parse_model(PipelineSpec, BASELINE_PIPELINE, source="baseline preset")


PRESETS = {
    "canonical": canonical_pipeline,
    "baseline": baseline_pipeline,
}


# ======================================
# Shape calculus
# ======================================

def composed_denominator(spec: PipelineSpec) -> int:
    """Smallest count every valid input length must be a multiple of"""
    denominator = 1
    factor = Fraction(1)
    for block in spec.blocks:
        if block.kind == "SeparationHead":
            break
        factor *= block.temporal_factor
        denominator = math.lcm(denominator, factor.denominator)
    return denominator


def composed_factor(spec: PipelineSpec) -> Fraction:
    factor = Fraction(1)
    for block in spec.blocks:
        if block.kind != "SeparationHead":
            factor *= block.temporal_factor
    return factor


def block_output_shape(block: BlockSpec, shape: TensorShape) -> TensorShape:
    if block.kind == "SeparationHead":
        return TensorShape(channels=block.out_channels, frames=block.feature_dim)
    frames = shape.frames * block.temporal_factor
    if frames.denominator != 1:
        raise IndivisibleInput(
            f"{block.name}: {shape.frames} frames x {block.temporal_factor} is not a whole frame count"
        )
    return TensorShape(channels=block.out_channels, frames=int(frames))


def input_shape(spec: PipelineSpec, m: int) -> TensorShape:
    return TensorShape(channels=spec.input_channels, frames=m)


def infer_shape(spec: PipelineSpec, m: int) -> List[TensorShape]:
    """Output shape after each block, in block order"""
    denominator = composed_denominator(spec)
    if m < 1 or m % denominator:
        raise IndivisibleInput(
            f"m = {m} is not a positive multiple of {denominator} (composed temporal denominator of '{spec.name}')"
        )
    shapes = []
    shape = input_shape(spec, m)
    for block in spec.blocks:
        shape = block_output_shape(block, shape)
        shapes.append(shape)
    return shapes


def filter_rates(spec: PipelineSpec, m: int) -> List[Fraction]:
    """r_i = output elements of block i / system input elements"""
    system_input = spec.input_channels * m
    return [Fraction(shape.elements, system_input) for shape in infer_shape(spec, m)]


# ======================================
# Param / MAC accounting
# ======================================

def rconv_units(block: BlockSpec) -> List[UnitSpec]:
    """Unit layout of a 1D-R-Conv stack; only the first unit down-samples"""
    units = []
    channels = block.in_channels
    for index in range(block.repeat):
        units.append(UnitSpec(
            in_channels=channels,
            out_channels=block.out_channels,
            stride=block.stride if index == 0 else 1,
            expansion=block.expansion,
            kernel_lengths=list(block.kernel_lengths),
        ))
        channels = block.out_channels
    return units


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def unit_cost(unit: UnitSpec, frames_in: int) -> Tuple[int, int, int]:
    """(params, macs, frames_out) of one 1D-R-Conv unit"""
    frames_out = _ceil_div(frames_in, unit.stride)
    expanded = unit.expanded
    width = unit.path_channels

    params = expanded * unit.in_channels + 2 * expanded
    macs = expanded * unit.in_channels * frames_in
    for kernel in unit.kernel_lengths:
        params += width * kernel + 2 * width
        macs += width * kernel * frames_out
    params += unit.out_channels * expanded + 2 * unit.out_channels
    macs += unit.out_channels * expanded * frames_out
    return params, macs, frames_out


def block_cost(block: BlockSpec, shape_in: TensorShape) -> Tuple[int, int]:
    """(params, macs) of one block given its input shape; normalization is 0 MACs"""
    if block.kind == "Conv1D":
        kernel = block.kernel_lengths[0]
        frames_out = _ceil_div(shape_in.frames, block.stride)
        params = block.out_channels * block.in_channels * kernel
        if block.normalize:
            params += 2 * block.out_channels
        return params, block.out_channels * block.in_channels * kernel * frames_out

    if block.kind == "RConvStack":
        params = macs = 0
        frames = shape_in.frames
        for unit in rconv_units(block):
            unit_params, unit_macs, frames = unit_cost(unit, frames)
            params += unit_params
            macs += unit_macs
        return params, macs

    # average pooling is free; the 1x1 projection runs on a single pooled frame
    weights = block.in_channels * block.out_channels * block.feature_dim
    return weights, weights


def block_groups(spec: PipelineSpec) -> List[str]:
    groups = []
    seen_abstraction = False
    for block in spec.blocks:
        if block.kind == "SeparationHead":
            groups.append("decoder")
        elif block.kind == "Conv1D" and not seen_abstraction:
            groups.append("encoder")
        else:
            seen_abstraction = True
            groups.append("abstraction")
    return groups


def count_costs(spec: PipelineSpec, m: int) -> CostReport:
    shapes = infer_shape(spec, m)
    previous = input_shape(spec, m)
    per_block = []
    for block, group, shape in zip(spec.blocks, block_groups(spec), shapes):
        params, macs = block_cost(block, previous)
        per_block.append(BlockCost(name=block.name, group=group, params=params, macs=macs))
        previous = shape

    groups: Dict[str, GroupCost] = {name: GroupCost() for name in GROUPS}
    for cost in per_block:
        groups[cost.group].params += cost.params
        groups[cost.group].macs += cost.macs
    return CostReport(per_block=per_block, groups=groups)


def range_macs(spec: PipelineSpec, m: int, first: int, last: int) -> int:
    """MACs of blocks first..last inclusive"""
    report = count_costs(spec, m)
    return sum(cost.macs for cost in report.per_block[first:last + 1])


# ======================================
# Service
# ======================================

RATE_COLUMNS = ["block", "channels", "frames", "rate", "rate_value"]


class PipelineService:
    """Service class for pipeline presets, pipeline documents and per-block tables"""

    def __init__(self):
        self.presets = PRESETS

    def preset_names(self) -> List[str]:
        return sorted(self.presets)

    def get_preset(self, name: str) -> Optional[PipelineSpec]:
        factory = self.presets.get(name)
        return factory() if factory else None

    def load(self, ref: Union[str, Path]) -> PipelineSpec:
        """Resolve a preset name or load a pipeline document from disk"""
        if isinstance(ref, str) and ref in self.presets:
            return self.presets[ref]()
        path = Path(ref)
        if not path.exists():
            raise MalformedConfig(
                f"Unknown pipeline '{ref}': not a preset ({', '.join(self.preset_names())}) and no such file"
            )
        spec = load_model(PipelineSpec, path)
        logger.info(f"Loaded pipeline '{spec.name}' with {len(spec.blocks)} blocks from {path}")
        return spec

    def dump(self, spec: PipelineSpec, path: Union[str, Path]) -> Path:
        return write_json(path, spec)

    def rate_table(self, spec: PipelineSpec, m: int) -> List[Dict[str, Any]]:
        """One row per block: output shape and exact filter rate"""
        shapes = infer_shape(spec, m)
        rates = filter_rates(spec, m)
        return [
            {"block": block.name, "channels": shape.channels, "frames": shape.frames,
             "rate": str(rate), "rate_value": float(rate)}
            for block, shape, rate in zip(spec.blocks, shapes, rates)
        ]
