"""Detection metrics (phishy = positive class) and cross-method comparison."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Hashable, Mapping, Sequence

from .corpus import Label
from .errors import EmptyTestSet

if TYPE_CHECKING:
    from .evasion import EvasionSpec
    from .pipeline import PipelineConfig

logger = logging.getLogger(__name__)

ZERO_DIVISION_CONVENTIONS = "f1=0 when precision+recall=0; fpr=0 when fp+tn=0"

COMPARISON_COLUMNS = (
    "method",
    "evasion",
    "ratio",
    "recall",
    "precision",
    "f1",
    "accuracy",
    "fpr",
    "wall_time_ms",
)


@dataclass(frozen=True)
class Metrics:
    recall_phishy: float
    precision_phishy: float
    f1: float
    accuracy: float
    fpr: float
    confusion: tuple[int, int, int, int]

    @classmethod
    def from_confusion(cls, tp: int, fp: int, tn: int, fn: int) -> "Metrics":
        total = tp + fp + tn + fn
        if total == 0:
            raise EmptyTestSet("no predictions to score")
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        accuracy = (tp + tn) / total
        fpr = fp / (fp + tn) if fp + tn > 0 else 0.0
        return cls(
            recall_phishy=recall,
            precision_phishy=precision,
            f1=f1,
            accuracy=accuracy,
            fpr=fpr,
            confusion=(tp, fp, tn, fn),
        )

    def as_dict(self) -> dict:
        tp, fp, tn, fn = self.confusion
        return {
            "recall_phishy": self.recall_phishy,
            "precision_phishy": self.precision_phishy,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "fpr": self.fpr,
            "confusion": {"tp": tp, "fp": fp, "tn": tn, "fn": fn},
            "positive_class": Label.PHISHY.value,
            "conventions": ZERO_DIVISION_CONVENTIONS,
        }


def score(
    predictions: Mapping[Hashable, Label], truth: Mapping[Hashable, Label]
) -> Metrics:
    """Confusion-based metrics over matching prediction/truth keys."""
    if not predictions and not truth:
        raise EmptyTestSet("cannot score an empty test set")
    if set(predictions) != set(truth):
        raise ValueError("prediction and truth domains differ")
    tp = fp = tn = fn = 0
    for key, predicted in predictions.items():
        actual = truth[key]
        if actual is Label.UNKNOWN:
            raise ValueError(f"truth label for {key!r} is unknown")
        if predicted is Label.PHISHY:
            if actual is Label.PHISHY:
                tp += 1
            else:
                fp += 1
        else:
            if actual is Label.PHISHY:
                fn += 1
            else:
                tn += 1
    return Metrics.from_confusion(tp, fp, tn, fn)


def compare_methods(
    config: "PipelineConfig",
    methods: Sequence[str],
    evasion_specs: Sequence["EvasionSpec | None"],
    out_path: str | Path,
) -> Path:
    """Run every method against every evasion setting; write one CSV.

    For each evasion setting the corpus is split and evaded once, and the
    graph and embeddings are built once, so all methods see identical
    inputs. wall_time_ms covers the method-specific inference stage only.
    """
    from . import pipeline

    if not methods:
        raise ValueError("compare_methods needs at least one method")
    settings = list(evasion_specs) if evasion_specs else [None]

    out_path = Path(out_path)
    rows: list[dict[str, object]] = []
    for spec in settings:
        prepared = pipeline.prepare(config, evasion=spec)
        artifacts = pipeline.build_artifacts(
            config, prepared, with_embeddings="bpe" in methods
        )
        for method in methods:
            started = time.perf_counter()
            outcome = pipeline.infer_method(config, artifacts, method)
            elapsed_ms = (time.perf_counter() - started) * 1000.0
            truth = prepared.test_truth
            predictions = {raw: outcome.predictions[raw] for raw in truth}
            metrics = score(predictions, truth)
            rows.append(
                {
                    "method": method,
                    "evasion": spec.method.value if spec is not None else "none",
                    "ratio": f"{spec.ratio:g}" if spec is not None else "",
                    "recall": f"{metrics.recall_phishy:.6f}",
                    "precision": f"{metrics.precision_phishy:.6f}",
                    "f1": f"{metrics.f1:.6f}",
                    "accuracy": f"{metrics.accuracy:.6f}",
                    "fpr": f"{metrics.fpr:.6f}",
                    "wall_time_ms": f"{elapsed_ms:.3f}",
                }
            )

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=COMPARISON_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    logger.info("wrote %d comparison rows to %s", len(rows), out_path)
    return out_path
