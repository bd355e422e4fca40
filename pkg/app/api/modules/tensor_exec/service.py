"""
Deterministic forward execution of a PipelineSpec with synthetic weights.

Every reduction runs in a fixed order (taps outer, input channels inner) with
plain elementwise float32 arithmetic, never BLAS, so a run split across any
serialization boundary reproduces the monolithic run bit for bit.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.errors import EmptyRange, ShapeMismatch
from app.core.rng import make_rng
from app.api.modules.pipeline.models import BlockSpec, PipelineSpec, UnitSpec
from app.api.modules.pipeline.service import infer_shape, rconv_units
from .codec import deserialize, digest, serialize
from .models import InferenceResult, Tensor, WeightSet

logger = logging.getLogger(__name__)

EPS = np.float32(1e-5)

BlockObserver = Callable[[int, Tensor], None]


# ======================================
# Primitive operations
# ======================================

def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0))


def normalize(x: np.ndarray) -> np.ndarray:
    """Layer normalization across channels, per frame, before the affine terms"""
    mean = x.mean(axis=0, keepdims=True, dtype=np.float32)
    centered = x - mean
    var = (centered * centered).mean(axis=0, keepdims=True, dtype=np.float32)
    return centered / np.sqrt(var + EPS)


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    return normalize(x) * gamma[:, None] + beta[:, None]


def _taps(x: np.ndarray, kernel: int, stride: int) -> Tuple[np.ndarray, int]:
    """Zero-padded input and output frame count.

    Stride 1 uses same-padding; larger strides use left-aligned windows so the
    output has ceil(frames / stride) frames.
    """
    frames = x.shape[1]
    if stride == 1:
        left = (kernel - 1) // 2
        right = kernel - 1 - left
        frames_out = frames
    else:
        frames_out = -(-frames // stride)
        left = 0
        right = max(0, stride * (frames_out - 1) + kernel - frames)
    if left or right:
        x = np.pad(x, ((0, 0), (left, right)))
    return x, frames_out


def _window(padded: np.ndarray, tap: int, stride: int, frames_out: int) -> np.ndarray:
    return padded[:, tap:tap + stride * (frames_out - 1) + 1:stride]


def pointwise(weight: np.ndarray, x: np.ndarray) -> np.ndarray:
    """weight (out, in) applied to x (in, frames), accumulated channel by channel"""
    out = np.zeros((weight.shape[0], x.shape[1]), dtype=np.float32)
    for c in range(weight.shape[1]):
        out += weight[:, c:c + 1] * x[c:c + 1, :]
    return out


def conv1d(x: np.ndarray, weight: np.ndarray, stride: int) -> np.ndarray:
    """Dense 1-D convolution, weight (out, in, kernel)"""
    kernel = weight.shape[2]
    padded, frames_out = _taps(x, kernel, stride)
    out = np.zeros((weight.shape[0], frames_out), dtype=np.float32)
    for tap in range(kernel):
        out += pointwise(weight[:, :, tap], _window(padded, tap, stride, frames_out))
    return out


def depthwise(x: np.ndarray, weight: np.ndarray, stride: int) -> np.ndarray:
    """Per-channel 1-D convolution, weight (channels, kernel)"""
    kernel = weight.shape[1]
    padded, frames_out = _taps(x, kernel, stride)
    out = np.zeros((x.shape[0], frames_out), dtype=np.float32)
    for tap in range(kernel):
        out += weight[:, tap:tap + 1] * _window(padded, tap, stride, frames_out)
    return out


# ======================================
# Weights
# ======================================

def _normal(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    scale = 1.0 / np.sqrt(fan_in)
    return (rng.standard_normal(shape) * scale).astype(np.float32)


def _norm_params(weights: Dict[str, np.ndarray], prefix: str, channels: int) -> None:
    weights[f"{prefix}.gamma"] = np.ones(channels, dtype=np.float32)
    weights[f"{prefix}.beta"] = np.zeros(channels, dtype=np.float32)


def _unit_weights(rng: np.random.Generator, weights: Dict[str, np.ndarray], prefix: str, unit: UnitSpec) -> None:
    expanded, width = unit.expanded, unit.path_channels
    weights[f"{prefix}.expand"] = _normal(rng, (expanded, unit.in_channels), unit.in_channels)
    _norm_params(weights, f"{prefix}.expand_norm", expanded)
    for index, kernel in enumerate(unit.kernel_lengths):
        weights[f"{prefix}.path{index}"] = _normal(rng, (width, kernel), kernel)
        _norm_params(weights, f"{prefix}.path{index}_norm", width)
    weights[f"{prefix}.project"] = _normal(rng, (unit.out_channels, expanded), expanded)
    _norm_params(weights, f"{prefix}.project_norm", unit.out_channels)


def make_weights(spec: PipelineSpec, seed: int) -> WeightSet:
    """Seeded weights with scale 1/sqrt(fan_in); normalization starts at identity"""
    rng = make_rng(seed)
    blocks = []
    for block in spec.blocks:
        weights: Dict[str, np.ndarray] = {}
        if block.kind == "Conv1D":
            kernel = block.kernel_lengths[0]
            weights["conv"] = _normal(rng, (block.out_channels, block.in_channels, kernel),
                                      block.in_channels * kernel)
            if block.normalize:
                _norm_params(weights, "conv_norm", block.out_channels)
        elif block.kind == "RConvStack":
            for index, unit in enumerate(rconv_units(block)):
                _unit_weights(rng, weights, f"u{index}", unit)
        else:
            weights["project"] = _normal(rng, (block.out_channels * block.feature_dim, block.in_channels),
                                         block.in_channels)
        blocks.append(weights)
    return WeightSet(seed=seed, blocks=blocks)


# ======================================
# Execution
# ======================================

def _activate(x: np.ndarray, weights: Dict[str, np.ndarray], prefix: str) -> np.ndarray:
    return layer_norm(relu(x), weights[f"{prefix}.gamma"], weights[f"{prefix}.beta"])


def _run_unit(x: np.ndarray, weights: Dict[str, np.ndarray], prefix: str, unit: UnitSpec) -> np.ndarray:
    hidden = _activate(pointwise(weights[f"{prefix}.expand"], x), weights, f"{prefix}.expand_norm")
    width = unit.path_channels
    paths = []
    for index in range(len(unit.kernel_lengths)):
        part = hidden[index * width:(index + 1) * width]
        part = depthwise(part, weights[f"{prefix}.path{index}"], unit.stride)
        paths.append(_activate(part, weights, f"{prefix}.path{index}_norm"))
    merged = np.concatenate(paths, axis=0)
    out = _activate(pointwise(weights[f"{prefix}.project"], merged), weights, f"{prefix}.project_norm")
    if unit.residual:
        out = out + x
    return out


def run_block(block: BlockSpec, weights: Dict[str, np.ndarray], tensor: Tensor) -> Tensor:
    if tensor.data.shape[0] != block.in_channels:
        raise ShapeMismatch(
            f"{block.name} expects {block.in_channels} input channels, got {tensor.data.shape[0]}"
        )
    frames = tensor.data.shape[1]
    if block.stride > 1 and frames % block.stride:
        raise ShapeMismatch(f"{block.name} strides by {block.stride}, got {frames} frames")
    x = np.array(tensor.data, dtype=np.float32, order="C", copy=True)

    if block.kind == "Conv1D":
        out = conv1d(x, weights["conv"], block.stride)
        if block.normalize:
            out = _activate(out, weights, "conv_norm")
        else:
            out = relu(out)
    elif block.kind == "RConvStack":
        out = x
        for index, unit in enumerate(rconv_units(block)):
            out = _run_unit(out, weights, f"u{index}", unit)
    else:
        pooled = x.mean(axis=1, keepdims=True, dtype=np.float32)
        out = pointwise(weights["project"], pooled).reshape(block.out_channels, block.feature_dim)
    return Tensor(out)


def _check_range(spec: PipelineSpec, blocks: Optional[Tuple[int, int]]) -> Tuple[int, int]:
    if blocks is None:
        blocks = (0, len(spec.blocks) - 1)
    first, last = blocks
    if first > last or first < 0 or last >= len(spec.blocks):
        raise EmptyRange(f"block interval {first}..{last} selects nothing in a {len(spec.blocks)}-block pipeline")
    return first, last


def run_pipeline(
    spec: PipelineSpec,
    weights: WeightSet,
    tensor: Tensor,
    blocks: Optional[Tuple[int, int]] = None,
    on_block: Optional[BlockObserver] = None,
) -> Tensor:
    """Run blocks first..last (inclusive); the whole pipeline when blocks is None"""
    first, last = _check_range(spec, blocks)
    if len(weights.blocks) != len(spec.blocks):
        raise ShapeMismatch(f"weight set covers {len(weights.blocks)} blocks, pipeline has {len(spec.blocks)}")
    for index in range(first, last + 1):
        tensor = run_block(spec.blocks[index], weights.blocks[index], tensor)
        if on_block is not None:
            on_block(index, tensor)
    return tensor


def run_partitioned(
    spec: PipelineSpec,
    weights: WeightSet,
    tensor: Tensor,
    intervals: Sequence[Tuple[int, int]],
    on_block: Optional[BlockObserver] = None,
) -> Tuple[Tensor, List[bytes]]:
    """Run consecutive intervals, crossing a serialize/deserialize boundary after each.

    Returns the final tensor and the serialized message leaving every interval.
    """
    if not intervals:
        raise EmptyRange("no intervals to run")
    messages = []
    for interval in intervals:
        tensor = run_pipeline(spec, weights, tensor, blocks=tuple(interval), on_block=on_block)
        message = serialize(tensor)
        messages.append(message)
        tensor = deserialize(message)
    return tensor, messages


# ======================================
# Service
# ======================================

class InferenceService:
    """Service class for seeded pipeline runs that record every block output"""

    def run(
        self,
        spec: PipelineSpec,
        tensor: Tensor,
        seed: int,
        intervals: Optional[Sequence[Tuple[int, int]]] = None,
    ) -> InferenceResult:
        """Run whole, or split at the given intervals with a wire boundary after each"""
        infer_shape(spec, tensor.data.shape[1])
        weights = make_weights(spec, seed)
        digests: Dict[str, str] = {}

        def record(index: int, output: Tensor) -> None:
            digests[spec.blocks[index].name] = digest(output)

        messages: List[bytes] = []
        if intervals is None:
            features = run_pipeline(spec, weights, tensor, on_block=record)
        else:
            features, messages = run_partitioned(spec, weights, tensor, intervals, on_block=record)
        logger.info(
            f"Ran '{spec.name}' on {tensor.data.shape[1]} samples"
            + ("" if intervals is None else f" in {len(intervals)} part(s)")
            + f": features {digest(features)[:12]}"
        )
        return InferenceResult(features=features, block_digests=digests, messages=messages)
