"""
Scenario loading, data plane execution, timing runs and latency summaries
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.config import BATCH_WORKERS, SCENARIO_DIR
from app.core.errors import MalformedConfig, MissingBaseline, PlanChainMismatch
from app.core.io import load_model, parse_model, read_structured, write_csv, write_json
from app.core.rng import make_rng
from app.data.presets import N_MACHINES
from app.api.modules.pipeline.models import PipelineSpec
from app.api.modules.pipeline.service import PipelineService, infer_shape, range_macs
from app.api.modules.planner.models import PartitionPlan
from app.api.modules.planner.service import PlannerService
from app.api.modules.scoring.service import synth_mixture
from app.api.modules.tensor_exec.codec import digest, load_pcm, serialized_size
from app.api.modules.tensor_exec.models import Tensor
from app.api.modules.tensor_exec.service import make_weights, run_pipeline
from .engine import EngineResult, Hop, packetize, run_chain
from .models import (
    JitterSpec,
    LatencyReport,
    LinkTraffic,
    Percentiles,
    RunRecord,
    Scenario,
    ScenarioSuite,
    SuiteReport,
)

logger = logging.getLogger(__name__)

METRICS = ("t_s", "t_p", "t_t")
QUANTILES = {"p5": 0.05, "p25": 0.25, "p50": 0.5, "p75": 0.75, "p95": 0.95}


# ======================================
# Scenario documents
# ======================================

def parse_suite(data, source: str = "scenario") -> ScenarioSuite:
    """Accept a suite document or a single scenario document"""
    if isinstance(data, dict) and "scenarios" in data:
        return parse_model(ScenarioSuite, data, source=source)
    scenario = parse_model(Scenario, data, source=source)
    return ScenarioSuite(name=scenario.name, scenarios=[scenario])


def _rate_label(value: float) -> str:
    return f"{value:.3g}"


def expand_suite(suite: ScenarioSuite) -> List[Scenario]:
    """Scenarios of a suite, multiplied out over its bandwidth x compute-rate grid"""
    if suite.grid is None:
        return list(suite.scenarios)
    expanded = []
    for scenario in suite.scenarios:
        for bandwidth in suite.grid.bandwidths:
            for rate in suite.grid.compute_rates:
                expanded.append(scenario.model_copy(update={
                    "name": f"{scenario.name}@bw={_rate_label(bandwidth)},rate={_rate_label(rate)}",
                    "links": [link.model_copy(update={"bandwidth": bandwidth}) for link in scenario.links],
                    "chain": [node.model_copy(update={"compute_rate": rate}) for node in scenario.chain],
                }))
    return expanded


def override_mode(suite: ScenarioSuite, mode: str) -> ScenarioSuite:
    return suite.model_copy(update={
        "scenarios": [s.model_copy(update={"mode": mode}) for s in suite.scenarios],
    })


# ======================================
# Data plane
# ======================================

@dataclass(frozen=True)
class DataPlane:
    """Message sizes and digests of one scenario input; timing runs reuse it"""

    input_bytes: int
    vnf_bytes: List[int] = field(default_factory=list)
    feature_digest: Optional[str] = None
    boundary_digests: List[str] = field(default_factory=list)


def scenario_input(scenario: Scenario) -> Tensor:
    if scenario.input_path:
        tensor = load_pcm(scenario.input_path)
        if tensor.shape.frames != scenario.m:
            raise MalformedConfig(
                f"{scenario.input_path} holds {tensor.shape.frames} samples, scenario expects m={scenario.m}"
            )
        return tensor
    return synth_mixture(N_MACHINES, scenario.m, scenario.input_seed)[1]


def data_plane_key(scenario: Scenario, plan: Optional[PartitionPlan]) -> Tuple:
    vnfs = None if plan is None else tuple(tuple(v) for v in plan.vnfs)
    return (scenario.pipeline, scenario.m, scenario.seed, scenario.input_seed,
            scenario.input_path, scenario.execute, vnfs)


# ======================================
# Timing
# ======================================

def build_hops(
    scenario: Scenario,
    spec: PipelineSpec,
    plan: Optional[PartitionPlan],
    plane: DataPlane,
    compute_scale: Optional[Sequence[float]] = None,
    io_scale: Optional[Sequence[float]] = None,
) -> List[Hop]:
    """Per-node timing roles; scales are per-node jitter factors"""
    count = len(scenario.chain)
    compute_scale = compute_scale or [1.0] * count
    io_scale = io_scale or [1.0] * count
    hops = []
    for index, node in enumerate(scenario.chain):
        rate = node.compute_rate * compute_scale[index]
        last = index == count - 1
        compute = 0.0
        emits = plane.input_bytes
        if plan is None:
            stores = index == 0 or last
            if last:
                compute = range_macs(spec, scenario.m, 0, len(spec.blocks) - 1) / rate
        else:
            hosted = plan.hosted_by(node.id)
            stores = index == 0 or last or bool(hosted)
            for vnf in hosted:
                first, end = plan.vnfs[vnf]
                compute += range_macs(spec, scenario.m, first, end) / rate
                compute += node.cf_io_overhead * io_scale[index]
            if hosted:
                emits = plane.vnf_bytes[hosted[-1]]
        hops.append(Hop(
            per_packet_overhead=node.per_packet_overhead,
            per_message_overhead=node.per_message_overhead,
            stores=stores,
            compute=compute,
            emits=emits,
        ))
    return hops


def _lognormal(rng: np.random.Generator, sigma: float, count: int) -> List[float]:
    if sigma <= 0:
        return [1.0] * count
    return [float(v) for v in np.exp(rng.normal(0.0, sigma, size=count))]


def sample_jitter(jitter: JitterSpec, n: int, nodes: int) -> List[Tuple[List[float], List[float]]]:
    """(compute factors, io factors) per run, drawn up front so results do not depend on scheduling"""
    rng = make_rng(jitter.seed)
    samples = []
    for _ in range(n):
        compute = _lognormal(rng, jitter.compute_sigma, nodes)
        io = _lognormal(rng, jitter.io_sigma, nodes)
        samples.append((compute, io))
    return samples


def summarize(runs: Sequence[RunRecord]) -> Dict[str, Percentiles]:
    frame = pd.DataFrame([r.model_dump() for r in runs])
    summary = {}
    for metric in METRICS:
        column = frame[metric]
        values = {name: float(column.quantile(q)) for name, q in QUANTILES.items()}
        summary[metric] = Percentiles(mean=float(column.mean()), **values)
    return summary


def ecdf(runs: Sequence[RunRecord], metric: str = "t_s") -> List[float]:
    """Empirical CDF value of each run's metric, in run order"""
    column = pd.Series([getattr(r, metric) for r in runs])
    return [float(v) for v in column.rank(method="max") / len(column)]


# ======================================
# Rates and comparisons
# ======================================

def link_rates(scenario: Scenario, plan: Optional[PartitionPlan]) -> List[Fraction]:
    """Theoretical filter rate of the message crossing each link"""
    rates = []
    current = Fraction(1)
    for node in scenario.chain[:-1]:
        if plan is not None:
            for vnf in plan.hosted_by(node.id):
                current = plan.theoretical_rates[vnf]
        rates.append(current)
    return rates


def measured_rates(report: LatencyReport) -> List[Fraction]:
    """Per-link bytes over the raw first-link bytes, headers included"""
    if not report.baseline_bytes:
        raise MissingBaseline(f"report '{report.scenario}' has no SF baseline byte count")
    return [Fraction(link.bytes, report.baseline_bytes) for link in report.links]


def reduction(report: LatencyReport, baseline: LatencyReport, metric: str = "t_s") -> float:
    """Relative drop of the median metric against a baseline report"""
    return 1.0 - report.median(metric) / baseline.median(metric)


# ======================================
# Report files
# ======================================

def run_rows(report: LatencyReport) -> List[Dict]:
    cdf = ecdf(report.runs)
    return [
        {"scenario": report.scenario, "mode": report.mode, "run": r.run,
         "t_p": r.t_p, "t_t": r.t_t, "t_s": r.t_s, "ecdf_t_s": value}
        for r, value in zip(report.runs, cdf)
    ]


def link_rows(report: LatencyReport) -> List[Dict]:
    measured = measured_rates(report) if report.baseline_bytes else [None] * len(report.links)
    return [
        {"scenario": report.scenario, "mode": report.mode, "link": link.link, "bytes": link.bytes,
         "packets": link.packets, "theoretical_rate": float(link.theoretical_rate),
         "measured_rate": None if rate is None else float(rate)}
        for link, rate in zip(report.links, measured)
    ]


RUN_COLUMNS = ["scenario", "mode", "run", "t_p", "t_t", "t_s", "ecdf_t_s"]
LINK_COLUMNS = ["scenario", "mode", "link", "bytes", "packets", "theoretical_rate", "measured_rate"]
COMPARISON_COLUMNS = ["scenario", "mode", "pipeline", "runs", "t_s", "t_p", "t_t", "reduction"]


def write_run_csv(path: Union[str, Path], reports: Sequence[LatencyReport]) -> Path:
    return write_csv(path, [row for report in reports for row in run_rows(report)], RUN_COLUMNS)


def write_link_csv(path: Union[str, Path], reports: Sequence[LatencyReport]) -> Path:
    return write_csv(path, [row for report in reports for row in link_rows(report)], LINK_COLUMNS)


# ======================================
# Service
# ======================================

class NetsimService:
    """Service class for scenario suites and SF/CF chain simulation"""

    def __init__(self, scenario_dir: Union[str, Path] = SCENARIO_DIR, workers: int = BATCH_WORKERS):
        self.scenario_dir = Path(scenario_dir)
        self.workers = workers
        self.pipelines = PipelineService()
        self.planner = PlannerService()

    # Scenario files

    def bundled_suites(self) -> List[str]:
        return sorted(path.stem for path in self.scenario_dir.glob("*.json"))

    def resolve_scenario_path(self, ref: Union[str, Path]) -> Path:
        """A bundled suite name or a path to a scenario document"""
        path = Path(ref)
        if path.exists():
            return path
        for suffix in (".json", ".yaml", ".yml"):
            candidate = self.scenario_dir / f"{ref}{suffix}"
            if candidate.exists():
                return candidate
        raise MalformedConfig(
            f"Unknown scenario '{ref}': no such file and not bundled ({', '.join(self.bundled_suites())})"
        )

    def load_suite(self, ref: Union[str, Path]) -> ScenarioSuite:
        path = self.resolve_scenario_path(ref)
        suite = parse_suite(read_structured(path), source=str(path))
        logger.info(f"Loaded suite '{suite.name}' with {len(suite.scenarios)} scenario(s) from {path}")
        return suite

    # Plans and data plane

    def resolve_plan(self, scenario: Scenario, spec: PipelineSpec) -> Optional[PartitionPlan]:
        """The CF plan, planned over every node but the server when the scenario has none"""
        if scenario.mode == "SF":
            if scenario.plan is not None:
                logger.warning(f"{scenario.name}: SF mode ignores the attached plan")
            return None
        if scenario.plan is None:
            return self.planner.make_plan(spec, scenario.m, scenario.node_ids[:-1])
        if scenario.plan.m != scenario.m:
            raise PlanChainMismatch(f"plan was made for m={scenario.plan.m}, scenario uses m={scenario.m}")
        return self.planner.validate_plan(scenario.plan, spec, scenario.node_ids)

    def build_data_plane(
        self,
        scenario: Scenario,
        spec: PipelineSpec,
        plan: Optional[PartitionPlan],
    ) -> DataPlane:
        shapes = infer_shape(spec, scenario.m)
        input_bytes = serialized_size(spec.input_channels, scenario.m)
        if not scenario.execute:
            vnf_bytes = [] if plan is None else [
                serialized_size(shapes[last].channels, shapes[last].frames) for _, last in plan.vnfs
            ]
            return DataPlane(input_bytes=input_bytes, vnf_bytes=vnf_bytes)

        weights = make_weights(spec, scenario.seed)
        tensor = scenario_input(scenario)
        if plan is None:
            features = run_pipeline(spec, weights, tensor)
            return DataPlane(input_bytes=input_bytes, feature_digest=digest(features))
        features, boundaries = self.planner.run_plan(spec, weights, tensor, plan)
        return DataPlane(
            input_bytes=input_bytes,
            vnf_bytes=[serialized_size(b.shape.channels, b.shape.frames) for b in boundaries],
            feature_digest=digest(features),
            boundary_digests=[digest(b) for b in boundaries],
        )

    # Timing runs

    def run_batch(
        self,
        scenario: Scenario,
        n: int,
        jitter: Optional[JitterSpec] = None,
        spec: Optional[PipelineSpec] = None,
        plan: Optional[PartitionPlan] = None,
        plane: Optional[DataPlane] = None,
    ) -> Tuple[List[RunRecord], Dict[str, Percentiles], EngineResult]:
        """n timing runs of one scenario; returns the runs, their summary and the nominal run.

        Without a spec the pipeline and plan are resolved from the scenario.
        """
        if n < 1:
            raise MalformedConfig(f"a batch needs at least one run, got {n}")
        jitter = jitter or JitterSpec()
        if spec is None:
            spec = self.pipelines.load(scenario.pipeline)
            if plan is None:
                plan = self.resolve_plan(scenario, spec)
        if plane is None:
            plane = self.build_data_plane(scenario, spec, plan)

        nominal = run_chain(build_hops(scenario, spec, plan, plane), scenario.links, scenario.packetization)
        if not jitter.enabled:
            runs = [RunRecord(run=i, t_p=nominal.t_p, t_t=nominal.t_t, t_s=nominal.t_s) for i in range(n)]
            return runs, summarize(runs), nominal

        factors = sample_jitter(jitter, n, len(scenario.chain))

        def one(index: int) -> RunRecord:
            compute, io = factors[index]
            result = run_chain(build_hops(scenario, spec, plan, plane, compute, io), scenario.links,
                               scenario.packetization)
            return RunRecord(run=index, t_p=result.t_p, t_t=result.t_t, t_s=result.t_s)

        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                runs = list(pool.map(one, range(n)))
        else:
            runs = [one(i) for i in range(n)]
        return runs, summarize(runs), nominal

    def simulate(self, scenario: Scenario, planes: Optional[Dict[Tuple, DataPlane]] = None) -> LatencyReport:
        """Run the data plane once, then the scenario's timing repetitions"""
        spec = self.pipelines.load(scenario.pipeline)
        infer_shape(spec, scenario.m)
        plan = self.resolve_plan(scenario, spec)

        key = data_plane_key(scenario, plan)
        if planes is not None and key in planes:
            plane = planes[key]
        else:
            plane = self.build_data_plane(scenario, spec, plan)
            if planes is not None:
                planes[key] = plane

        runs, summary, nominal = self.run_batch(
            scenario, scenario.repetitions, scenario.jitter, spec=spec, plan=plan, plane=plane,
        )
        links = [
            LinkTraffic(link=name, bytes=size, packets=packets, theoretical_rate=rate)
            for name, size, packets, rate in zip(
                scenario.link_names(), nominal.link_bytes, nominal.link_packets, link_rates(scenario, plan)
            )
        ]
        report = LatencyReport(
            scenario=scenario.name,
            mode=scenario.mode,
            pipeline=spec.name,
            m=scenario.m,
            plan=plan,
            links=links,
            baseline_bytes=sum(packetize(plane.input_bytes, scenario.packetization)),
            feature_digest=plane.feature_digest,
            boundary_digests=plane.boundary_digests,
            runs=runs,
            summary=summary,
        )
        logger.info(
            f"Simulated '{scenario.name}' ({scenario.mode}, {scenario.repetitions} run(s)): "
            f"median t_s = {report.median('t_s'):.4f}s, t_p = {report.median('t_p'):.4f}s, "
            f"t_t = {report.median('t_t'):.4f}s"
        )
        return report

    def simulate_suite(self, suite: ScenarioSuite) -> SuiteReport:
        planes: Dict[Tuple, DataPlane] = {}
        reports = [self.simulate(scenario, planes) for scenario in expand_suite(suite)]
        return SuiteReport(suite=suite.name, reports=reports)

    # Reports

    def write_reports(self, report: SuiteReport, out: Union[str, Path]) -> List[Path]:
        """report.json, runs.csv and links.csv under out"""
        out = Path(out)
        return [
            write_json(out / "report.json", report),
            write_run_csv(out / "runs.csv", report.reports),
            write_link_csv(out / "links.csv", report.reports),
        ]

    def load_reports(self, paths: Sequence[Union[str, Path]]) -> List[LatencyReport]:
        """Suite reports or single latency reports, flattened in order"""
        reports = []
        for path in paths:
            try:
                reports.extend(load_model(SuiteReport, path).reports)
            except MalformedConfig:
                reports.append(load_model(LatencyReport, path))
        return reports

    def compare(self, reports: Sequence[LatencyReport], baseline: Optional[str] = None) -> List[Dict[str, Any]]:
        """Median latencies per report, with the reduction against a named baseline"""
        by_name = {r.scenario: r for r in reports}
        if baseline is not None and baseline not in by_name:
            raise MalformedConfig(f"Baseline '{baseline}' is not among {', '.join(by_name)}")
        reference = by_name.get(baseline) if baseline else None
        return [
            {
                "scenario": r.scenario,
                "mode": r.mode,
                "pipeline": r.pipeline,
                "runs": len(r.runs),
                "t_s": r.median("t_s"),
                "t_p": r.median("t_p"),
                "t_t": r.median("t_t"),
                "reduction": None if reference is None else reduction(r, reference),
            }
            for r in reports
        ]
