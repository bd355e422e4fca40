"""
Tests for forward execution, synthetic weights and the tensor wire format
"""
import numpy as np
import pytest
from hypothesis import given, settings, HealthCheck, strategies as st

from app.core.errors import (
    EmptyRange,
    IndivisibleInput,
    MalformedConfig,
    MalformedHeader,
    ShapeMismatch,
    TruncatedPayload,
)
from app.api.modules.pipeline.models import TensorShape
from app.api.modules.pipeline.service import (
    baseline_pipeline,
    canonical_pipeline,
    count_costs,
    infer_shape,
    rconv_units,
)
from app.api.modules.tensor_exec.codec import deserialize, digest, load_pcm, save_pcm, serialize, serialized_size
from app.api.modules.tensor_exec.models import Tensor
from app.api.modules.tensor_exec.service import (
    InferenceService,
    make_weights,
    normalize,
    relu,
    run_block,
    run_partitioned,
    run_pipeline,
)

SPEC = canonical_pipeline()
WEIGHTS = make_weights(SPEC, 0)


def random_input(m: int, seed: int) -> Tensor:
    rng = np.random.default_rng(seed)
    return Tensor(rng.standard_normal((1, m)).astype(np.float32))


# ======================================
# Weights
# ======================================

def test_weights_are_deterministic():
    again = make_weights(SPEC, 0)
    for a, b in zip(WEIGHTS.blocks, again.blocks):
        assert a.keys() == b.keys()
        for name in a:
            assert a[name].tobytes() == b[name].tobytes()


def test_weights_depend_on_seed():
    other = make_weights(SPEC, 1)
    assert WEIGHTS.blocks[0]["conv"].tobytes() != other.blocks[0]["conv"].tobytes()


@pytest.mark.parametrize("factory", [canonical_pipeline, baseline_pipeline])
def test_scalar_count_matches_param_total(factory):
    spec = factory()
    assert make_weights(spec, 3).scalar_count == count_costs(spec, 16384).total_params


def test_macs_match_weight_enumeration():
    """Every conv weight scalar is used once per output frame of its conv"""
    m = 16384
    report = count_costs(SPEC, m)
    shapes = [TensorShape(channels=1, frames=m)] + infer_shape(SPEC, m)
    for index, block in enumerate(SPEC.blocks):
        weights = WEIGHTS.blocks[index]
        frames_in, frames_out = shapes[index].frames, shapes[index + 1].frames
        if block.kind == "Conv1D":
            expected = weights["conv"].size * frames_out
        elif block.kind == "RConvStack":
            expected = 0
            frames = frames_in
            for u, unit in enumerate(rconv_units(block)):
                after = frames // unit.stride
                expected += weights[f"u{u}.expand"].size * frames
                expected += sum(weights[f"u{u}.path{p}"].size for p in range(len(unit.kernel_lengths))) * after
                expected += weights[f"u{u}.project"].size * after
                frames = after
        else:
            expected = weights["project"].size
        assert report.per_block[index].macs == expected, block.name


# ======================================
# Blocks
# ======================================

def test_encoder_shape_law():
    out = run_block(SPEC.blocks[0], WEIGHTS.blocks[0], random_input(1024, 0))
    assert out.shape == TensorShape(channels=32, frames=256)


def test_relu_is_non_negative():
    x = np.random.default_rng(5).standard_normal((8, 64)).astype(np.float32)
    assert (relu(x) >= 0).all()


def test_normalize_constant_input_is_zero():
    x = np.full((16, 32), 2.5, dtype=np.float32)
    assert not normalize(x).any()


def test_run_block_rejects_wrong_channels():
    with pytest.raises(ShapeMismatch):
        run_block(SPEC.blocks[1], WEIGHTS.blocks[1], random_input(1024, 0))


@pytest.mark.parametrize("block, frames", [(0, 1023), (2, 254)])
def test_run_block_rejects_frames_off_the_stride(block, frames):
    channels = SPEC.blocks[block].in_channels
    x = Tensor(np.ones((channels, frames), dtype=np.float32))
    with pytest.raises(ShapeMismatch, match="strides by 4"):
        run_block(SPEC.blocks[block], WEIGHTS.blocks[block], x)


def test_full_pipeline_outputs_features():
    out = run_pipeline(SPEC, WEIGHTS, random_input(16384, 1))
    assert out.shape == TensorShape(channels=4, frames=256)
    assert np.isfinite(out.data).all()


def test_full_pipeline_at_reference_length():
    out = run_pipeline(SPEC, WEIGHTS, random_input(163840, 2))
    assert out.shape == TensorShape(channels=4, frames=256)


def test_single_block_range_is_run_block():
    x = random_input(4096, 3)
    assert run_pipeline(SPEC, WEIGHTS, x, blocks=(0, 0)) == run_block(SPEC.blocks[0], WEIGHTS.blocks[0], x)


@pytest.mark.parametrize("blocks", [(3, 2), (-1, 4), (0, 10)])
def test_bad_ranges_rejected(blocks):
    with pytest.raises(EmptyRange):
        run_pipeline(SPEC, WEIGHTS, random_input(1024, 0), blocks=blocks)


@settings(max_examples=8, deadline=None)
@given(st.integers(min_value=1, max_value=16))
def test_executed_shapes_match_analytic(k):
    m = 1024 * k
    seen = {}
    run_pipeline(SPEC, WEIGHTS, random_input(m, k), on_block=lambda i, t: seen.__setitem__(i, t.shape))
    assert [seen[i] for i in range(len(SPEC.blocks))] == infer_shape(SPEC, m)


def test_repeated_runs_are_byte_identical():
    x = random_input(4096, 9)
    assert serialize(run_pipeline(SPEC, WEIGHTS, x)) == serialize(run_pipeline(SPEC, WEIGHTS, x))


# ======================================
# Split composition
# ======================================

@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.integers(min_value=0, max_value=8),
    st.integers(min_value=1, max_value=9),
    st.integers(min_value=0, max_value=2**31),
)
def test_split_composition_is_bit_exact(a, b, seed):
    first, split = min(a, b), max(a, b)
    if first == split:
        split = first + 1
    x = random_input(2048, seed)
    start = run_pipeline(SPEC, WEIGHTS, x, blocks=(0, first - 1)) if first > 0 else x
    whole = run_pipeline(SPEC, WEIGHTS, start, blocks=(first, 9))
    left = run_pipeline(SPEC, WEIGHTS, start, blocks=(first, split - 1))
    right = run_pipeline(SPEC, WEIGHTS, deserialize(serialize(left)), blocks=(split, 9))
    assert right == whole


def test_every_split_matches_monolithic_over_many_inputs():
    """100 (seed, input) pairs, every split point, across a wire boundary"""
    m = 1024
    weight_sets = {seed: make_weights(SPEC, seed) for seed in range(4)}
    for pair in range(100):
        weights = weight_sets[pair % 4]
        x = random_input(m, 1000 + pair)
        boundaries = []
        whole = run_pipeline(SPEC, weights, x, on_block=lambda i, t: boundaries.append(t))
        for split in range(1, len(SPEC.blocks)):
            resumed = run_pipeline(SPEC, weights, deserialize(serialize(boundaries[split - 1])), blocks=(split, 9))
            assert resumed == whole, (pair, split)


def test_every_split_at_working_length():
    x = random_input(16384, 77)
    whole = run_pipeline(SPEC, WEIGHTS, x)
    for split in range(1, len(SPEC.blocks)):
        out, messages = run_partitioned(SPEC, WEIGHTS, x, [(0, split - 1), (split, 9)])
        assert out == whole
        assert len(messages) == 2


# ======================================
# Wire format
# ======================================

def test_serialized_size_law():
    t = Tensor(np.zeros((4, 256), dtype=np.float32))
    assert len(serialize(t)) == 8 + 4096 == serialized_size(4, 256)


def test_round_trip_random_tensors():
    rng = np.random.default_rng(11)
    for _ in range(100):
        shape = tuple(int(v) for v in rng.integers(1, 40, size=2))
        t = Tensor(rng.standard_normal(shape).astype(np.float32) * 1e3)
        back = deserialize(serialize(t))
        assert back == t


def test_truncated_stream_rejected():
    payload = serialize(Tensor(np.ones((2, 8), dtype=np.float32)))
    with pytest.raises(TruncatedPayload):
        deserialize(payload[:-1])


@pytest.mark.parametrize("payload", [b"", b"\x01\x00\x00", b"\x00" * 8])
def test_malformed_header_rejected(payload):
    with pytest.raises(MalformedHeader):
        deserialize(payload)


def test_trailing_bytes_rejected():
    payload = serialize(Tensor(np.ones((2, 8), dtype=np.float32)))
    with pytest.raises(MalformedHeader):
        deserialize(payload + b"\x00")


def test_digest_tracks_content():
    a = Tensor(np.ones((2, 4), dtype=np.float32))
    b = Tensor(np.ones((2, 4), dtype=np.float32) * 2)
    assert digest(a) == digest(Tensor(a.data.copy()))
    assert digest(a) != digest(b)


def test_load_pcm(tmp_path):
    samples = np.array([0, 16384, -32768, 32767], dtype="<i2")
    path = tmp_path / "clip.pcm"
    samples.tofile(path)
    t = load_pcm(path)
    assert t.shape == TensorShape(channels=1, frames=4)
    assert t.data[0, 1] == 0.5
    assert t.data[0, 2] == -1.0


def test_pcm_round_trip_within_one_step(tmp_path):
    rng = np.random.default_rng(12)
    t = Tensor(rng.uniform(-1.0, 1.0, size=(1, 2048)).astype(np.float32))
    back = load_pcm(save_pcm(t, tmp_path / "clip.pcm"))
    assert back.shape == t.shape
    assert np.abs(back.data - t.data).max() <= 1 / 32768


def test_pcm_saturates_out_of_range_samples(tmp_path):
    t = Tensor(np.array([[2.0, -2.0, 0.0]], dtype=np.float32))
    back = load_pcm(save_pcm(t, tmp_path / "loud.pcm"))
    assert back.data[0].tolist() == [32767 / 32768, -1.0, 0.0]


def test_missing_pcm_is_config_error(tmp_path):
    with pytest.raises(MalformedConfig):
        load_pcm(tmp_path / "absent.pcm")


# ======================================
# Inference service
# ======================================

def test_split_run_matches_whole_run_digests():
    service = InferenceService()
    x = random_input(8192, 21)
    whole = service.run(SPEC, x, seed=0)
    split = service.run(SPEC, x, seed=0, intervals=[(0, 4), (5, 6), (7, 9)])
    assert split.features == whole.features
    assert split.block_digests == whole.block_digests
    assert list(whole.block_digests) == [b.name for b in SPEC.blocks]
    assert whole.messages == []
    assert [len(message) for message in split.messages] == [
        serialized_size(64, 32), serialized_size(160, 8), serialized_size(4, 256),
    ]


def test_inference_seed_changes_features():
    service = InferenceService()
    x = random_input(4096, 22)
    assert service.run(SPEC, x, seed=0).features != service.run(SPEC, x, seed=1).features


def test_inference_rejects_indivisible_input():
    with pytest.raises(IndivisibleInput):
        InferenceService().run(SPEC, random_input(1000, 0), seed=0)


def test_negative_weight_seed_rejected():
    with pytest.raises(MalformedConfig, match="seed"):
        make_weights(SPEC, -1)
