"""Cascade controller: binary arm first, escalate on low confidence.

The confidence score of a probability vector is the gap between its two
largest entries. A sample whose binary-arm score reaches the configured
confidence threshold keeps the binary prediction (source "bnn"); otherwise the
int8 arm re-processes the input (source "int8"). Acceptance is inclusive:
cs >= ct keeps the fast path, so ct = 0 never escalates.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import quantize_input, run_arm
from .errors import DatasetError, NumericError, ShapeError
from .modelfile import CoopModel
from .perf import LatencyProfile, arm_latency, coopnet_latency
from .tensors import QuantTensor

SOURCE_BNN = "bnn"
SOURCE_INT8 = "int8"


@dataclass(frozen=True)
class CascadeConfig:
    ct: float = 0.0

    def __post_init__(self):
        if not 0.0 <= float(self.ct) < 1.0:
            raise NumericError(f"confidence threshold {self.ct} outside [0, 1)")
        object.__setattr__(self, "ct", float(self.ct))


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    top1: int
    cs: float
    source: str


def _top_two(probs: np.ndarray) -> tuple[int, int]:
    top1 = int(np.argmax(probs))  # ties resolve to the lowest index
    rest = probs.copy()
    rest[top1] = -np.inf
    return top1, int(np.argmax(rest))


def confidence_score(probs) -> float:
    """Gap between the two largest class probabilities; a tied maximum gives 0."""
    p = np.asarray(probs, dtype=np.float64).reshape(-1)
    if p.size < 2:
        raise ShapeError("confidence score needs at least two classes")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-4:
        raise NumericError("probabilities must be non-negative and sum to 1")
    i, j = _top_two(p)
    return float(p[i] - p[j])


def _as_input(m: CoopModel, x) -> QuantTensor:
    if isinstance(x, QuantTensor):
        if x.shape != m.input_shape:
            raise ShapeError(f"input {x.shape.as_tuple()} does not match model {m.input_shape.as_tuple()}")
        return x
    return quantize_input(np.asarray(x), m.input_shape)


def infer(m: CoopModel, x, cfg: CascadeConfig) -> Prediction:
    """Run the binary arm; keep its answer iff cs >= ct, else run the int8 arm."""
    xq = _as_input(m, x)
    bnn_probs = run_arm(m.bnn, xq).probs
    bnn_cs = confidence_score(bnn_probs)
    if bnn_cs >= cfg.ct:
        top1, _ = _top_two(bnn_probs)
        return Prediction(probs=bnn_probs, top1=top1, cs=bnn_cs, source=SOURCE_BNN)
    int8_probs = run_arm(m.int8, xq).probs
    top1, _ = _top_two(int8_probs)
    return Prediction(probs=int8_probs, top1=top1, cs=confidence_score(int8_probs), source=SOURCE_INT8)


@dataclass(frozen=True)
class SampleRecord:
    index: int
    predicted: int
    source: str
    cs: float  # the binary arm's routing score


@dataclass(frozen=True)
class BatchReport:
    samples: tuple
    forwarded_count: int
    accuracy: Optional[float]
    modeled_latency: int

    def to_json(self) -> str:
        payload = {
            "samples": [[s.index, s.predicted, s.source, s.cs] for s in self.samples],
            "forwarded_count": self.forwarded_count,
            "accuracy": self.accuracy,
            "modeled_latency": self.modeled_latency,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def thread_count() -> int:
    raw = os.environ.get("COOPNET_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise NumericError(f"COOPNET_THREADS must be a positive integer, got {raw!r}")
    return n


def _map_indexed(fn, count: int) -> list:
    threads = thread_count()
    if threads == 1 or count < 2:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _dataset_views(m: CoopModel, dataset) -> list:
    arr = np.asarray(dataset)
    if arr.ndim == 3:
        arr = arr[:, None, :, :]
    if arr.ndim != 4 or arr.shape[0] < 1:
        raise DatasetError(f"dataset must be a non-empty (N, C, H, W) stack, got {arr.shape}")
    if tuple(arr.shape[1:]) != m.input_shape.as_tuple():
        raise DatasetError(
            f"dataset samples {arr.shape[1:]} do not match model input {m.input_shape.as_tuple()}"
        )
    return [arr[i] for i in range(arr.shape[0])]


def _check_labels(labels, count: int) -> Optional[np.ndarray]:
    if labels is None:
        return None
    lab = np.asarray(labels).reshape(-1)
    if lab.size != count:
        raise DatasetError(f"{lab.size} labels for {count} samples")
    return lab.astype(np.int64)


def evaluate_batch(
    m: CoopModel,
    dataset,
    labels,
    cfg: CascadeConfig,
    profile: LatencyProfile,
) -> BatchReport:
    """Route every sample, then price the batch with the latency model."""
    samples = _dataset_views(m, dataset)
    lab = _check_labels(labels, len(samples))
    l_bnn = arm_latency(m.bnn, profile)
    l_int8 = arm_latency(m.int8, profile)

    def run_one(i: int) -> SampleRecord:
        xq = quantize_input(samples[i], m.input_shape)
        bnn_probs = run_arm(m.bnn, xq).probs
        cs = confidence_score(bnn_probs)
        if cs >= cfg.ct:
            top1, _ = _top_two(bnn_probs)
            return SampleRecord(index=i, predicted=top1, source=SOURCE_BNN, cs=cs)
        int8_probs = run_arm(m.int8, xq).probs
        top1, _ = _top_two(int8_probs)
        return SampleRecord(index=i, predicted=top1, source=SOURCE_INT8, cs=cs)

    records = _map_indexed(run_one, len(samples))
    forwarded = sum(1 for r in records if r.source == SOURCE_INT8)
    latency = sum(
        coopnet_latency(r.source == SOURCE_INT8, l_bnn, l_int8, profile.l_cs) for r in records
    )
    accuracy = None
    if lab is not None:
        accuracy = float(np.mean([r.predicted == lab[r.index] for r in records]))
    return BatchReport(
        samples=tuple(records), forwarded_count=forwarded, accuracy=accuracy, modeled_latency=latency
    )


@dataclass(frozen=True)
class SweepRow:
    ct: float
    accuracy: float
    delta_vs_int8: float
    forwarded_fraction: float
    avg_speedup: float
    modeled_latency: int


def sweep_ct(
    m: CoopModel,
    dataset,
    labels,
    ct_values: Sequence[float],
    profile: LatencyProfile,
) -> list[SweepRow]:
    """One row per threshold. Both arms run once per sample; every row is
    derived from the cached outputs, which matches per-threshold evaluation
    exactly because routing only compares the cached score against ct."""
    samples = _dataset_views(m, dataset)
    lab = _check_labels(labels, len(samples))
    if lab is None:
        raise DatasetError("sweep_ct needs labels to report accuracy")
    cts = [CascadeConfig(ct).ct for ct in ct_values]
    l_bnn = arm_latency(m.bnn, profile)
    l_int8 = arm_latency(m.int8, profile)

    def run_one(i: int):
        xq = quantize_input(samples[i], m.input_shape)
        bnn_probs = run_arm(m.bnn, xq).probs
        int8_probs = run_arm(m.int8, xq).probs
        b1, _ = _top_two(bnn_probs)
        i1, _ = _top_two(int8_probs)
        return b1, confidence_score(bnn_probs), i1

    per_sample = _map_indexed(run_one, len(samples))
    bnn_top = np.array([r[0] for r in per_sample])
    cs = np.array([r[1] for r in per_sample])
    int8_top = np.array([r[2] for r in per_sample])
    bs = len(samples)
    int8_only_accuracy = float(np.mean(int8_top == lab))
    int8_only_latency = bs * l_int8

    rows = []
    for ct in cts:
        routed = cs < ct
        predicted = np.where(routed, int8_top, bnn_top)
        accuracy = float(np.mean(predicted == lab))
        latency = sum(coopnet_latency(bool(r), l_bnn, l_int8, profile.l_cs) for r in routed)
        rows.append(
            SweepRow(
                ct=ct,
                accuracy=accuracy,
                delta_vs_int8=accuracy - int8_only_accuracy,
                forwarded_fraction=float(np.mean(routed)),
                avg_speedup=1.0 - latency / int8_only_latency,
                modeled_latency=latency,
            )
        )
    return rows
