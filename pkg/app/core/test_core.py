"""
Tests for document output and seeded generators
"""
import json
from fractions import Fraction

import numpy as np
import pytest

from app.core.errors import MalformedConfig
from app.core.io import dumps_json
from app.core.rng import make_rng
from app.api.modules.netsim.models import Percentiles
from app.api.modules.planner.models import PartitionPlan


def test_dumps_json_handles_models_nested_in_containers():
    summary = Percentiles(p5=1.0, p25=2.0, p50=3.0, p75=4.0, p95=5.0, mean=3.0)
    text = dumps_json({"lite-cf": {"t_s": summary}, "runs": [summary]})
    document = json.loads(text)
    assert document["lite-cf"]["t_s"]["p50"] == 3.0
    assert document["runs"][0]["mean"] == 3.0
    assert text.endswith("}\n")


def test_dumps_json_writes_rates_as_strings():
    plan = PartitionPlan(
        pipeline="canonical", m=16384, chain=["client"], vnfs=[(0, 9)],
        placements=["client"], theoretical_rates=[Fraction(1, 16)],
    )
    assert json.loads(dumps_json([plan]))[0]["theoretical_rates"] == ["1/16"]


def test_same_seed_same_stream():
    assert make_rng(7).standard_normal(5).tolist() == make_rng(7).standard_normal(5).tolist()
    assert make_rng(np.int64(7)).integers(0, 100, 3).tolist() == make_rng(7).integers(0, 100, 3).tolist()


@pytest.mark.parametrize("seed", [-1, 1.5, True, "3"])
def test_invalid_seed_rejected(seed):
    with pytest.raises(MalformedConfig, match="seed"):
        make_rng(seed)
