"""
Bundled pipeline presets.

CANONICAL_BLOCKS reproduces the per-block layer table of the lightweight model:
Encoder 1 x m -> 32 x m/4 through Layer 8 -> 1280 x m/1024, then the
separation head -> 4 x 256.
BASELINE_BLOCKS is the heavier predecessor: identical blocks, but the encoder
keeps the full frame rate, so every later block runs on 4x more frames.
"""
from copy import deepcopy

DUAL_PATH_KERNELS = [7, 5]
ENCODER_KERNEL = 5  # filter length L, bias-free
EXPANSION = 4
N_MACHINES = 4
FEATURE_DIM = 256

CANONICAL_BLOCKS = [
    {"id": 0, "name": "Encoder", "kind": "Conv1D", "in_channels": 1, "out_channels": 32,
     "temporal_factor": "1/4", "kernel_lengths": [ENCODER_KERNEL], "stride": 4, "normalize": False},
    {"id": 1, "name": "Layer 1", "kind": "RConvStack", "in_channels": 32, "out_channels": 16,
     "temporal_factor": "1", "repeat": 1, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 1},
    {"id": 2, "name": "Layer 2", "kind": "RConvStack", "in_channels": 16, "out_channels": 24,
     "temporal_factor": "1/4", "repeat": 2, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 4},
    {"id": 3, "name": "Layer 3", "kind": "RConvStack", "in_channels": 24, "out_channels": 32,
     "temporal_factor": "1/4", "repeat": 3, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 4},
    {"id": 4, "name": "Layer 4", "kind": "RConvStack", "in_channels": 32, "out_channels": 64,
     "temporal_factor": "1/4", "repeat": 4, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 4},
    {"id": 5, "name": "Layer 5", "kind": "RConvStack", "in_channels": 64, "out_channels": 96,
     "temporal_factor": "1", "repeat": 3, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 1},
    {"id": 6, "name": "Layer 6", "kind": "RConvStack", "in_channels": 96, "out_channels": 160,
     "temporal_factor": "1/4", "repeat": 3, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 4},
    {"id": 7, "name": "Layer 7", "kind": "RConvStack", "in_channels": 160, "out_channels": 320,
     "temporal_factor": "1", "repeat": 1, "kernel_lengths": DUAL_PATH_KERNELS, "stride": 1},
    {"id": 8, "name": "Layer 8", "kind": "Conv1D", "in_channels": 320, "out_channels": 1280,
     "temporal_factor": "1", "kernel_lengths": [1], "stride": 1},
    {"id": 9, "name": "Separation", "kind": "SeparationHead", "in_channels": 1280,
     "out_channels": N_MACHINES, "temporal_factor": "1", "kernel_lengths": [1], "stride": 1,
     "feature_dim": FEATURE_DIM},
]

for _block in CANONICAL_BLOCKS:
    if _block["kind"] == "RConvStack":
        _block["expansion"] = EXPANSION

CANONICAL_PIPELINE = {
    "name": "canonical",
    "input_channels": 1,
    "element_bytes": 4,
    "blocks": CANONICAL_BLOCKS,
}

BASELINE_BLOCKS = deepcopy(CANONICAL_BLOCKS)
BASELINE_BLOCKS[0].update({"temporal_factor": "1", "stride": 1})

BASELINE_PIPELINE = {
    "name": "baseline",
    "input_channels": 1,
    "element_bytes": 4,
    "blocks": BASELINE_BLOCKS,
}
