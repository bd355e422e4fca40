"""
Command-line entry point: plan, simulate, infer, score, report.

Exit status 0 on success, 2 on configuration errors, 3 on runtime validation errors.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Callable, List, Optional

import pandas as pd
import typer
from rich.console import Console
from rich.table import Table

from app.config import DEFAULT_M, DEFAULT_SEED, LOG_FORMAT, LOG_LEVEL, OUTPUT_DIR
from app.core.errors import IANetError
from app.core.io import dumps_json, write_csv, write_json
from app.data.presets import N_MACHINES
from app.api.modules.pipeline.service import PipelineService
from app.api.modules.planner.service import RATE_TABLE_COLUMNS, PlannerService
from app.api.modules.netsim.service import COMPARISON_COLUMNS, NetsimService, override_mode
from app.api.modules.scoring.service import ScoringService, synth_mixture
from app.api.modules.tensor_exec.codec import digest, load_pcm
from app.api.modules.tensor_exec.service import InferenceService, make_weights

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="IA-Net-Lite pipeline, split planner and chain simulator")
console = Console(stderr=True)


class OutputFormat(str, Enum):
    json = "json"
    csv = "csv"


class Mode(str, Enum):
    sf = "sf"
    cf = "cf"


def _run(action: Callable[[], None]) -> None:
    try:
        action()
    except IANetError as e:
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=e.exit_code)


@app.callback()
def main_callback(log_level: str = typer.Option(LOG_LEVEL, "--log-level", help="Logging level")):
    logging.basicConfig(level=log_level.upper(), format=LOG_FORMAT, force=True)


# ======================================
# plan
# ======================================

@app.command()
def plan(
    pipeline: str = typer.Option("canonical", "--pipeline", help="Preset name or pipeline file"),
    m: int = typer.Option(DEFAULT_M, "--m", help="Input length in samples"),
    chain: str = typer.Option("client,s1,s2", "--chain", help="Comma-separated processing nodes in path order"),
    out: Path = typer.Option(OUTPUT_DIR, "--out", help="Output directory"),
    output_format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
):
    """Split a pipeline at the concave points of its filter-rate curve"""
    def action():
        service = PlannerService()
        spec = service.pipelines.load(pipeline)
        nodes = [node.strip() for node in chain.split(",") if node.strip()]
        partition = service.make_plan(spec, m, nodes)
        rows = service.rate_table(spec, m)
        service.dump_plan(partition, out / "plan.json")
        write_csv(out / "rates.csv", rows, RATE_TABLE_COLUMNS)
        if output_format is OutputFormat.json:
            typer.echo(dumps_json(partition), nl=False)
        else:
            table = pd.DataFrame(rows, columns=RATE_TABLE_COLUMNS)
            typer.echo(table.to_csv(index=False, lineterminator="\n"), nl=False)

    _run(action)


# ======================================
# simulate
# ======================================

@app.command()
def simulate(
    scenario: str = typer.Option("paper-calibrated", "--scenario", help="Bundled suite name or scenario file"),
    plan_file: Optional[Path] = typer.Option(None, "--plan", help="Partition plan applied to CF scenarios"),
    mode: Optional[Mode] = typer.Option(None, "--mode", help="Force every scenario into one mode"),
    execute: bool = typer.Option(True, "--execute/--timing-only",
                                 help="Run the pipeline for digests, or size messages analytically"),
    out: Path = typer.Option(OUTPUT_DIR, "--out", help="Output directory"),
    output_format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
):
    """Run a scenario suite and write latency reports"""
    def action():
        service = NetsimService()
        suite = service.load_suite(scenario)
        if mode is not None:
            suite = override_mode(suite, mode.value.upper())
        partition = service.planner.load_plan(plan_file) if plan_file is not None else None
        scenarios = []
        for s in suite.scenarios:
            update = {} if execute else {"execute": False}
            if partition is not None and s.mode == "CF":
                update["plan"] = partition
            scenarios.append(s.model_copy(update=update))
        report = service.simulate_suite(suite.model_copy(update={"scenarios": scenarios}))
        service.write_reports(report, out)
        if output_format is OutputFormat.json:
            typer.echo(dumps_json({r.scenario: r.summary for r in report.reports}), nl=False)
        else:
            typer.echo((out / "links.csv").read_text(), nl=False)

    _run(action)


# ======================================
# infer
# ======================================

@app.command()
def infer(
    pipeline: str = typer.Option("canonical", "--pipeline", help="Preset name or pipeline file"),
    input_file: Optional[Path] = typer.Option(None, "--input", help="16-bit little-endian PCM file"),
    m: int = typer.Option(DEFAULT_M, "--m", help="Synthetic input length when no PCM file is given"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed", min=0, help="Weight seed"),
    input_seed: int = typer.Option(DEFAULT_SEED, "--input-seed", min=0, help="Synthetic mixture seed"),
    plan_file: Optional[Path] = typer.Option(None, "--plan", help="Run per plan, serializing at VNF boundaries"),
    out: Path = typer.Option(OUTPUT_DIR, "--out", help="Output directory"),
    output_format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
):
    """Execute the pipeline and record a digest of every intermediate tensor"""
    def action():
        planner = PlannerService()
        spec = planner.pipelines.load(pipeline)
        if input_file is not None:
            tensor = load_pcm(input_file)
        else:
            tensor = synth_mixture(N_MACHINES, m, input_seed)[1]

        intervals = None
        if plan_file is not None:
            partition = planner.validate_plan(planner.load_plan(plan_file), spec)
            intervals = partition.vnfs
        result = InferenceService().run(spec, tensor, seed, intervals)

        features = result.features
        document = {
            "pipeline": spec.name,
            "m": tensor.shape.frames,
            "seed": seed,
            "split": plan_file is not None,
            "features_digest": digest(features),
            "block_digests": result.block_digests,
        }
        write_json(out / "digests.json", document)
        if output_format is OutputFormat.json:
            write_json(out / "features.json", {"shape": list(features.data.shape),
                                               "features": features.data.tolist()})
        else:
            pd.DataFrame(features.data).to_csv(out / "features.csv", index=False, header=False,
                                               lineterminator="\n", float_format="%.9g")
        typer.echo(dumps_json(document), nl=False)

    _run(action)


# ======================================
# score
# ======================================

@app.command()
def score(
    pipeline: str = typer.Option("canonical", "--pipeline", help="Preset name or pipeline file"),
    m: int = typer.Option(16384, "--m", help="Clip length in samples"),
    seed: int = typer.Option(DEFAULT_SEED, "--seed", min=0, help="Weight and mixture seed"),
    clips: int = typer.Option(8, "--clips", min=1, help="Clips per label and machine"),
    metric: str = typer.Option("euclidean", "--metric", help="euclidean or cosine"),
    out: Path = typer.Option(OUTPUT_DIR, "--out", help="Output directory"),
    output_format: OutputFormat = typer.Option(OutputFormat.json, "--format"),
):
    """Synthetic labeled evaluation: per-machine AUC and mAUC"""
    def action():
        service = ScoringService(metric)
        spec = PipelineService().load(pipeline)
        summary = service.evaluate_synthetic(spec, make_weights(spec, seed), m, clips, seed)
        service.write_scores(out / "scores.csv", summary.samples)
        write_json(out / "auc.json", summary)
        if output_format is OutputFormat.json:
            typer.echo(dumps_json(summary), nl=False)
        else:
            typer.echo((out / "scores.csv").read_text(), nl=False)

    _run(action)


# ======================================
# report
# ======================================

@app.command()
def report(
    files: List[Path] = typer.Argument(..., help="report.json files written by simulate"),
    baseline: Optional[str] = typer.Option(None, "--baseline", help="Scenario the reductions are measured against"),
    out: Path = typer.Option(OUTPUT_DIR, "--out", help="Output directory"),
    output_format: OutputFormat = typer.Option(OutputFormat.csv, "--format"),
):
    """Compare median latencies across reports"""
    def action():
        service = NetsimService()
        rows = service.compare(service.load_reports(files), baseline)
        write_csv(out / "comparison.csv", rows, COMPARISON_COLUMNS)
        write_json(out / "comparison.json", rows)

        table = Table(title="Median latency (s)")
        for column in COMPARISON_COLUMNS:
            table.add_column(column, justify="left" if column in ("scenario", "mode", "pipeline") else "right")
        for row in rows:
            table.add_row(
                row["scenario"], row["mode"], row["pipeline"], str(row["runs"]),
                f"{row['t_s']:.4f}", f"{row['t_p']:.4f}", f"{row['t_t']:.4f}",
                "-" if row["reduction"] is None else f"{row['reduction']:.2%}",
            )
        console.print(table)
        if output_format is OutputFormat.json:
            typer.echo(dumps_json(rows), nl=False)
        else:
            typer.echo((out / "comparison.csv").read_text(), nl=False)

    _run(action)


def main():
    app()


if __name__ == "__main__":
    main()
