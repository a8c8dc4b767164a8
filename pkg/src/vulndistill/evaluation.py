"""Confusion-matrix metrics with the vulnerable class (label 1) as positive.

Any 0/0 ratio is reported as 0.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

CSV_HEADER = ("dataset", "split", "model", "recall", "precision", "f1")
FORMATS = ("json", "csv", "md")


@dataclass
class MetricsReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    dataset: str = ""
    split: str = ""
    model: str = ""
    predictions: list[dict] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("predictions")
        return d


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def compute_metrics(preds: Sequence[int], labels: Sequence[int], dataset: str = "",
                    split: str = "", model: str = "") -> MetricsReport:
    if len(preds) != len(labels):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(labels)} labels")
    if not preds:
        raise ValueError("cannot compute metrics on empty input")
    tp = fp = fn = tn = 0
    for p, y in zip(preds, labels):
        if p not in (0, 1) or y not in (0, 1):
            raise ValueError("predictions and labels must be 0 or 1")
        if p and y:
            tp += 1
        elif p:
            fp += 1
        elif y:
            fn += 1
        else:
            tn += 1
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return MetricsReport(tp, fp, fn, tn, precision, recall, f1, dataset, split, model)


def f1_from(precision: float, recall: float) -> float:
    return _ratio(2 * precision * recall, precision + recall)


def emit_report(r: MetricsReport, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(r.summary(), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerow([r.dataset, r.split, r.model, repr(r.recall), repr(r.precision), repr(r.f1)])
        return buf.getvalue()
    if fmt in ("md", "markdown", "markdown-table"):
        return emit_table([r])
    raise ValueError(f"unknown report format {fmt!r}; expected one of {', '.join(FORMATS)}")


def emit_table(reports: Sequence[MetricsReport]) -> str:
    """Markdown table with Recall, Precision, F1-measure as percentages."""
    lines = ["| Dataset | Split | Model | Recall | Precision | F1-measure |",
             "|---|---|---|---:|---:|---:|"]
    for r in reports:
        lines.append(f"| {r.dataset} | {r.split} | {r.model} | {100 * r.recall:.2f} "
                     f"| {100 * r.precision:.2f} | {100 * r.f1:.2f} |")
    return "\n".join(lines) + "\n"


def write_predictions(rows: Sequence[dict], path: str | Path) -> None:
    """One JSON object per line: id, label, pred, p_vulnerable."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({k: row[k] for k in ("id", "label", "pred", "p_vulnerable")}) + "\n")
