"""
Anomaly scoring of abstracted features, thresholding, and AUC evaluation
on synthetic labeled mixtures
"""
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.core.errors import DegenerateLabels, DimensionMismatch, MalformedConfig
from app.core.io import write_csv
from app.core.rng import make_rng
from app.api.modules.pipeline.models import PipelineSpec
from app.api.modules.pipeline.service import infer_shape
from app.api.modules.tensor_exec.models import Tensor, WeightSet
from app.api.modules.tensor_exec.service import run_pipeline
from .models import EvaluationSummary, Label, LabeledScore, MachineResult, Metric

logger = logging.getLogger(__name__)

FeatureLike = Union[Tensor, np.ndarray]


# ======================================
# Distances and decisions
# ======================================

def _rows(features: FeatureLike) -> np.ndarray:
    data = features.data if isinstance(features, Tensor) else np.asarray(features)
    if data.ndim != 2:
        raise DimensionMismatch(f"feature set must be machines x dims, got shape {data.shape}")
    return data.astype(np.float64)


def _euclidean(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a - b
    return np.sqrt((diff * diff).sum(axis=1))


def _cosine(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    dots = (a * b).sum(axis=1)
    distances = np.ones(a.shape[0])
    nonzero = norms > 0
    distances[nonzero] = 1.0 - dots[nonzero] / norms[nonzero]
    both_zero = (np.linalg.norm(a, axis=1) == 0) & (np.linalg.norm(b, axis=1) == 0)
    distances[both_zero] = 0.0
    return np.clip(distances, 0.0, 2.0)


DISTANCES = {
    "euclidean": _euclidean,
    "cosine": _cosine,
}


def anomaly_score(features: FeatureLike, reference: FeatureLike, metric: Metric = "euclidean") -> List[float]:
    """Per-machine distance between feature rows and reference rows"""
    a, b = _rows(features), _rows(reference)
    if a.shape != b.shape:
        raise DimensionMismatch(f"features {a.shape} and reference {b.shape} differ")
    if metric not in DISTANCES:
        raise MalformedConfig(f"Unknown distance '{metric}' (choose from {', '.join(DISTANCES)})")
    return [float(v) for v in DISTANCES[metric](a, b)]


def threshold_decision(scores: Sequence[float], threshold: float) -> List[Label]:
    """Anomalous iff score strictly exceeds the threshold"""
    if not math.isfinite(threshold):
        raise MalformedConfig("threshold must be finite")
    return ["anomalous" if score > threshold else "normal" for score in scores]


# ======================================
# AUC
# ======================================

def auc(samples: Sequence[LabeledScore]) -> float:
    """Rank-based AUC (Mann-Whitney U with midranks for ties)"""
    scores = pd.Series([s.score for s in samples], dtype="float64")
    anomalous = np.array([s.label == "anomalous" for s in samples], dtype=bool)
    n_anomalous = int(anomalous.sum())
    n_normal = len(samples) - n_anomalous
    if n_anomalous == 0 or n_normal == 0:
        raise DegenerateLabels(f"need both labels, got {n_normal} normal and {n_anomalous} anomalous")
    ranks = scores.rank(method="average").to_numpy()
    u_statistic = ranks[anomalous].sum() - n_anomalous * (n_anomalous + 1) / 2
    return float(u_statistic / (n_anomalous * n_normal))


def mauc(per_machine: Sequence[Sequence[LabeledScore]]) -> float:
    """Unweighted mean of machine-wise AUCs"""
    if not per_machine:
        raise DegenerateLabels("no machines to average over")
    values = [auc(samples) for samples in per_machine]
    return sum(values) / len(values)


# ======================================
# Synthetic mixtures
# ======================================

def _band(n_sources: int, index: int) -> Tuple[float, float]:
    """Normalized frequency band (cycles/sample) of source index"""
    width = 0.4 / n_sources
    low = 0.02 + index * width
    return low, low + width


def _band_limited(rng: np.random.Generator, m: int, band: Tuple[float, float]) -> np.ndarray:
    spectrum = np.fft.rfft(rng.standard_normal(m))
    freqs = np.fft.rfftfreq(m)
    spectrum[(freqs < band[0]) | (freqs >= band[1])] = 0
    signal = np.fft.irfft(spectrum, n=m)
    rms = np.sqrt(np.mean(signal * signal))
    return signal / rms if rms > 0 else signal


def synth_sources(n_sources: int, m: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([_band_limited(rng, m, _band(n_sources, i)) for i in range(n_sources)]).astype(np.float32)


def mix(sources: np.ndarray, weights: Sequence[float]) -> Tensor:
    weights = np.asarray(weights, dtype=np.float32)
    if weights.shape != (sources.shape[0],):
        raise DimensionMismatch(f"{weights.size} mixing weights for {sources.shape[0]} sources")
    observation = np.zeros((1, sources.shape[1]), dtype=np.float32)
    for index in range(sources.shape[0]):
        observation += weights[index] * sources[index:index + 1]
    return Tensor(observation)


def synth_mixture(
    n_sources: int,
    m: int,
    seed: int,
    weights: Optional[Sequence[float]] = None,
) -> Tuple[Tensor, Tensor]:
    """Band-limited sources mixed with standard-normal weights into a (1, m) observation"""
    if n_sources < 1 or m < 1:
        raise MalformedConfig(f"need n_sources >= 1 and m >= 1, got {n_sources} and {m}")
    rng = make_rng(seed)
    sources = synth_sources(n_sources, m, rng)
    if weights is None:
        weights = rng.standard_normal(n_sources)
    return Tensor(sources), mix(sources, weights)


def perturb_source(source: np.ndarray, band: Tuple[float, float], rng: np.random.Generator) -> np.ndarray:
    """Anomalous variant of a source: an amplitude burst plus an in-band tone"""
    m = source.shape[0]
    length = max(1, m // 8)
    start = int(rng.integers(0, m - length + 1))
    out = source.astype(np.float64).copy()
    out[start:start + length] *= 3.0
    freq = rng.uniform(*band)
    out += 0.5 * np.sin(2 * np.pi * freq * np.arange(m))
    return out.astype(np.float32)



# ======================================
# Service
# ======================================

SCORE_COLUMNS = ["score", "label", "machine"]


class ScoringService:
    """Service class for anomaly scoring with one distance metric"""

    def __init__(self, metric: Metric = "euclidean"):
        if metric not in DISTANCES:
            raise MalformedConfig(f"Unknown distance '{metric}' (choose from {', '.join(DISTANCES)})")
        self.metric = metric

    def score(self, features: FeatureLike, reference: FeatureLike) -> List[float]:
        return anomaly_score(features, reference, self.metric)

    def decide(self, scores: Sequence[float], threshold: float) -> List[Label]:
        return threshold_decision(scores, threshold)

    def auc_summary(self, samples: Sequence[LabeledScore]) -> Dict[str, Any]:
        """AUC of a labeled score list with its label counts"""
        value = auc(samples)
        return {
            "auc": value,
            "normal": sum(1 for s in samples if s.label == "normal"),
            "anomalous": sum(1 for s in samples if s.label == "anomalous"),
        }

    def evaluate_synthetic(
        self,
        spec: PipelineSpec,
        weights: WeightSet,
        m: int,
        clips_per_label: int,
        seed: int,
    ) -> EvaluationSummary:
        """Score normal and perturbed mixtures against a reference built from a normal mixture"""
        infer_shape(spec, m)
        n_machines = spec.blocks[-1].out_channels
        rng = make_rng(seed)
        mixing = rng.standard_normal(n_machines)
        reference = run_pipeline(spec, weights, mix(synth_sources(n_machines, m, rng), mixing))

        per_machine: List[List[LabeledScore]] = [[] for _ in range(n_machines)]
        for machine in range(n_machines):
            for label in ("normal", "anomalous"):
                for _ in range(clips_per_label):
                    sources = synth_sources(n_machines, m, rng)
                    if label == "anomalous":
                        sources[machine] = perturb_source(sources[machine], _band(n_machines, machine), rng)
                    features = run_pipeline(spec, weights, mix(sources, mixing))
                    score = self.score(features, reference)[machine]
                    per_machine[machine].append(LabeledScore(score=score, label=label, machine=machine))

        results = [
            MachineResult(machine=i, auc=auc(samples), normal=clips_per_label, anomalous=clips_per_label)
            for i, samples in enumerate(per_machine)
        ]
        summary = EvaluationSummary(
            pipeline=spec.name,
            m=m,
            seed=seed,
            metric=self.metric,
            clips_per_label=clips_per_label,
            per_machine=results,
            mauc=sum(r.auc for r in results) / len(results),
            samples=[s for samples in per_machine for s in samples],
        )
        logger.info(f"Synthetic evaluation of '{spec.name}': mAUC = {summary.mauc:.4f} over {n_machines} machines")
        return summary

    def write_scores(self, path: Union[str, Path], samples: Sequence[LabeledScore]) -> Path:
        rows = [{"score": s.score, "label": s.label, "machine": s.machine} for s in samples]
        return write_csv(path, rows, SCORE_COLUMNS)

    def read_scores(self, path: Union[str, Path]) -> List[LabeledScore]:
        path = Path(path)
        if not path.is_file():
            raise MalformedConfig(f"Score file not found: {path}")
        frame = pd.read_csv(path)
        missing = {"score", "label"} - set(frame.columns)
        if missing:
            raise MalformedConfig(f"{path} lacks column(s): {', '.join(sorted(missing))}")
        samples = []
        for row in frame.itertuples(index=False):
            machine = getattr(row, "machine", None)
            samples.append(LabeledScore(
                score=float(row.score),
                label=row.label,
                machine=None if machine is None or pd.isna(machine) else int(machine),
            ))
        return samples
