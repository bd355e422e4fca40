"""
Data holders for forward execution: tensors and synthetic weight sets
"""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from app.core.errors import ShapeMismatch, ValidationFailure
from app.api.modules.pipeline.models import TensorShape


@dataclass(frozen=True, eq=False)
class Tensor:
    """Rank-2 (channels x frames) float32 array flowing between blocks"""

    data: np.ndarray

    def __post_init__(self):
        data = self.data
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ShapeMismatch(f"tensor must be a non-empty channels x frames array, got {data.shape}")
        if data.dtype != np.float32 or not data.flags.c_contiguous:
            data = np.ascontiguousarray(data, dtype=np.float32)
            object.__setattr__(self, "data", data)
        if not np.isfinite(data).all():
            raise ValidationFailure("tensor holds non-finite values")

    @property
    def shape(self) -> TensorShape:
        return TensorShape(channels=self.data.shape[0], frames=self.data.shape[1])

    def __eq__(self, other) -> bool:
        """Bit-exact equality"""
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.data.shape == other.data.shape and self.data.tobytes() == other.data.tobytes()

    def __repr__(self):
        return f"Tensor(channels={self.data.shape[0]}, frames={self.data.shape[1]})"


@dataclass(frozen=True)
class WeightSet:
    """Per-block named weight arrays, fully determined by (spec, seed)"""

    seed: int
    blocks: List[Dict[str, np.ndarray]] = field(default_factory=list)

    @property
    def scalar_count(self) -> int:
        return sum(array.size for block in self.blocks for array in block.values())


@dataclass(frozen=True)
class InferenceResult:
    """Features of one run with the digest of every block output, keyed by block name"""

    features: Tensor
    block_digests: Dict[str, str] = field(default_factory=dict)
    messages: List[bytes] = field(default_factory=list)
