"""
Tests for concave-point splitting and VNF placement
"""
import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from app.core.errors import EmptyChain, MalformedConfig, PlanChainMismatch
from app.api.modules.pipeline.models import BlockSpec, PipelineSpec
from app.api.modules.pipeline.service import canonical_pipeline, filter_rates
from app.api.modules.tensor_exec.models import Tensor
from app.api.modules.tensor_exec.service import make_weights, run_pipeline
from app.api.modules.planner.service import PlannerService, concave_points, select_cuts, split_intervals

M = 163840
CHAIN = ["client", "s1", "s2"]

service = PlannerService()


def toy_pipeline(channels):
    blocks = []
    previous = 1
    for index, count in enumerate(channels):
        blocks.append(BlockSpec(id=index, name=f"B{index}", kind="Conv1D", in_channels=previous, out_channels=count))
        previous = count
    return PipelineSpec(name="toy", blocks=blocks)


# ======================================
# Concave points
# ======================================

def test_canonical_concave_points():
    rates = [Fraction(v) for v in ("8", "4", "3/2", "1/2", "1/4", "3/8", "5/32", "5/16", "5/4")]
    assert concave_points(rates) == [4, 6]


def test_monotone_sequence_has_no_concave_points():
    assert concave_points([Fraction(8), Fraction(4), Fraction(2), Fraction(1)]) == []


def test_plateau_is_not_concave():
    assert concave_points([1, 1, 1]) == []


def test_short_sequences():
    assert concave_points([3]) == []
    assert concave_points([3, 1]) == []


# ======================================
# Plans
# ======================================

def test_canonical_plan():
    plan = service.make_plan(canonical_pipeline(), M, CHAIN)
    assert plan.vnfs == [(0, 4), (5, 6), (7, 9)]
    assert plan.placements == ["client", "s1", "s2"]
    assert plan.theoretical_rates == [Fraction(1, 4), Fraction(5, 32), Fraction(1024, M)]


def test_single_node_chain():
    plan = service.make_plan(canonical_pipeline(), M, ["edge"])
    assert plan.vnfs == [(0, 9)]
    assert plan.placements == ["edge"]


def test_overflow_keeps_earliest_minimum():
    plan = service.make_plan(canonical_pipeline(), M, ["client", "s1"])
    assert plan.vnfs == [(0, 4), (5, 9)]
    assert plan.placements == ["client", "s1"]


def test_last_vnf_goes_to_last_node():
    plan = service.make_plan(canonical_pipeline(), M, ["client", "s1", "s2", "s3"])
    assert plan.placements == ["client", "s1", "s3"]


def test_empty_chain():
    with pytest.raises(EmptyChain):
        service.make_plan(canonical_pipeline(), M, [])


def test_plan_invariant_under_m_scaling():
    small = service.make_plan(canonical_pipeline(), 16384, CHAIN)
    large = service.make_plan(canonical_pipeline(), M, CHAIN)
    assert small.vnfs == large.vnfs
    assert small.placements == large.placements
    assert small.theoretical_rates[:-1] == large.theoretical_rates[:-1]


def test_boundaries_are_local_best():
    spec = canonical_pipeline()
    rates = filter_rates(spec, M)
    plan = service.make_plan(spec, M, CHAIN)
    for (first, last), boundary in zip(plan.vnfs, plan.theoretical_rates):
        assert all(boundary <= rates[i] for i in range(first, last))


def test_rate_table_flags_concave_points():
    rows = service.rate_table(canonical_pipeline(), M)
    assert [i for i, row in enumerate(rows) if row["concave"]] == [4, 6]
    assert not rows[-1]["concave"]


# ======================================
# Cut selection over arbitrary rate curves
# ======================================

def test_plateau_valley_stays_inside_a_vnf():
    rates = [Fraction(v) for v in (8, 1, 3, 1, 1, 4, 2, 5)]
    cuts = select_cuts(rates, 3)
    assert cuts == [1, 6]
    assert split_intervals(len(rates), cuts) == [(0, 1), (2, 6), (7, 7)]


def test_single_node_takes_no_cuts():
    assert select_cuts([Fraction(v) for v in (4, 1, 4, 1, 4)], 1) == []


rate_curves = st.lists(st.integers(min_value=1, max_value=8).map(Fraction), min_size=1, max_size=12)


@settings(max_examples=300, deadline=None)
@given(rate_curves, st.integers(min_value=1, max_value=5))
def test_every_inner_boundary_is_a_strict_local_minimum(rates, nodes):
    cuts = select_cuts(rates, nodes)
    assert cuts == concave_points(rates)[:nodes - 1]

    intervals = split_intervals(len(rates), cuts)
    assert intervals[0][0] == 0
    assert intervals[-1][1] == len(rates) - 1
    assert all(later[0] == earlier[1] + 1 for earlier, later in zip(intervals, intervals[1:]))
    assert len(intervals) <= nodes
    for _, last in intervals[:-1]:
        # shifting the boundary one block either way raises the outgoing volume
        assert rates[last - 1] > rates[last] < rates[last + 1]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=64), min_size=2, max_size=8),
       st.integers(min_value=1, max_value=4))
def test_planned_boundaries_on_random_pipelines(channels, nodes):
    spec = toy_pipeline(channels)
    rates = filter_rates(spec, 64)
    chain = [f"n{i}" for i in range(nodes)]
    plan = service.make_plan(spec, 64, chain)
    assert plan.theoretical_rates == [rates[last] for _, last in plan.vnfs]
    assert plan.placements[-1] == chain[-1]
    for _, last in plan.vnfs[:-1]:
        assert rates[last - 1] > rates[last] < rates[last + 1]


def link_volumes(vnfs, placements, rates, chain):
    """Data volume on each link client->...->server, with raw input at rate 1"""
    volumes = []
    current = Fraction(1)
    for node in chain:
        for (_, last), placed in zip(vnfs, placements):
            if placed == node:
                current = rates[last]
        volumes.append(current)
    return volumes


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=1, max_value=64), min_size=4, max_size=4))
def test_no_concave_points_matches_brute_force(channels):
    spec = toy_pipeline(channels)
    rates = filter_rates(spec, 64)
    assume(not concave_points(rates))

    plan = service.make_plan(spec, 64, CHAIN)
    assert plan.vnfs == [(0, 3)]
    assert plan.placements == ["s2"]
    planned = link_volumes(plan.vnfs, plan.placements, rates, CHAIN)

    for cut_mask in itertools.product([False, True], repeat=3):
        cuts = [i for i, cut in enumerate(cut_mask) if cut]
        starts = [0] + [c + 1 for c in cuts]
        ends = cuts + [3]
        vnfs = list(zip(starts, ends))
        for placements in itertools.combinations_with_replacement(CHAIN, len(vnfs)):
            other = link_volumes(vnfs, list(placements), rates, CHAIN)
            assert all(p <= o for p, o in zip(planned, other))


# ======================================
# Validation and documents
# ======================================

def test_validate_plan_rejects_wrong_pipeline():
    plan = service.make_plan(canonical_pipeline(), M, CHAIN)
    with pytest.raises(PlanChainMismatch):
        service.validate_plan(plan, toy_pipeline([2, 3, 4, 5]), CHAIN)


def test_validate_plan_rejects_foreign_node():
    plan = service.make_plan(canonical_pipeline(), M, CHAIN)
    with pytest.raises(PlanChainMismatch):
        service.validate_plan(plan, canonical_pipeline(), ["client", "s1", "server"])


def test_validate_plan_rejects_backwards_chain():
    plan = service.make_plan(canonical_pipeline(), M, CHAIN)
    with pytest.raises(PlanChainMismatch):
        service.validate_plan(plan, canonical_pipeline(), ["s2", "s1", "client"])


def test_plan_document(tmp_path):
    plan = service.make_plan(canonical_pipeline(), M, CHAIN)
    path = service.dump_plan(plan, tmp_path / "plan.json")
    document = json.loads(path.read_text())
    assert document["theoretical_rates"] == ["1/4", "5/32", "1/160"]
    assert document["vnfs"] == [[0, 4], [5, 6], [7, 9]]
    assert service.load_plan(path) == plan


def test_gapped_plan_document_rejected(tmp_path):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps({
        "m": M,
        "chain": CHAIN,
        "vnfs": [[0, 3], [5, 9]],
        "placements": ["client", "s1"],
        "theoretical_rates": ["1/2", "1/160"],
    }))
    with pytest.raises(MalformedConfig, match="contiguity"):
        service.load_plan(path)


def test_unknown_plan_key_rejected(tmp_path):
    plan = service.make_plan(canonical_pipeline(), M, CHAIN).model_dump(mode="json")
    plan["replicas"] = 2
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    with pytest.raises(MalformedConfig, match="replicas"):
        service.load_plan(path)


def test_run_plan_reconstructs_monolithic_run():
    spec = canonical_pipeline()
    weights = make_weights(spec, 5)
    x = Tensor(np.random.default_rng(8).standard_normal((1, 8192)).astype(np.float32))
    plan = service.make_plan(spec, 8192, CHAIN)
    features, boundaries = service.run_plan(spec, weights, x, plan)
    assert features == run_pipeline(spec, weights, x)
    assert [b.shape.elements for b in boundaries] == [
        int(rate * 8192) for rate in plan.theoretical_rates
    ]
