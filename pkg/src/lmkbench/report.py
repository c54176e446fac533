"""Tabular NME / FR / AUC summaries in markdown or CSV."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import List, NamedTuple

from .metrics import DEFAULT_THRESHOLD, MetricReport

FOOTNOTE = "FR and AUC out of 100; lower FR / higher AUC better"


class ReportError(ValueError):
    pass


class ReportRow(NamedTuple):
    model: str
    split: str
    normalization: str
    nme: float
    fr: float
    auc: float
    coverage: float

    @property
    def key(self):
        return (self.model, self.split, self.normalization)

    @classmethod
    def from_metrics(cls, report: MetricReport, model: str = "", split: str = "") -> "ReportRow":
        return cls(model or report.model, split or report.dataset, report.normalization.value,
                   report.mean_nme, report.fr, report.auc, report.coverage)


@dataclass
class ReportDoc:
    rows: List[ReportRow] = field(default_factory=list)
    threshold: float = DEFAULT_THRESHOLD

    def add(self, row: ReportRow) -> None:
        if any(r.key == row.key for r in self.rows):
            raise ReportError(f"duplicate report key {row.key}")
        self.rows.append(row)

    def columns(self) -> List[str]:
        t = f"{self.threshold:g}"
        return ["model", "split", "normalization", "NME", f"FR@{t}", f"AUC@{t}", "coverage"]


def _check(doc: ReportDoc) -> None:
    if not doc.rows:
        raise ReportError("report has no rows")
    keys = [r.key for r in doc.rows]
    if len(set(keys)) != len(keys):
        dup = next(k for k in keys if keys.count(k) > 1)
        raise ReportError(f"duplicate report key {dup}")


def emit_report(doc: ReportDoc, format: str = "markdown") -> str:
    """Markdown shows 2 decimals; CSV keeps full precision and ends with a ``#`` footnote."""
    _check(doc)
    cols = doc.columns()
    if format == "markdown":
        lines = ["| " + " | ".join(cols) + " |", "|" + "|".join(["---"] * 3 + ["---:"] * 4) + "|"]
        for r in doc.rows:
            cells = [r.model, r.split, r.normalization, f"{r.nme:.2f}", f"{r.fr:.2f}", f"{r.auc:.2f}",
                     f"{r.coverage:.2f}"]
            lines.append("| " + " | ".join(cells) + " |")
        lines += ["", FOOTNOTE]
        return "\n".join(lines) + "\n"
    if format == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(cols)
        for r in doc.rows:
            writer.writerow([r.model, r.split, r.normalization, *(repr(float(v)) for v in r[3:])])
        out.write(f"# {FOOTNOTE}\n")
        return out.getvalue()
    raise ReportError(f"unknown report format {format!r}; expected 'markdown' or 'csv'")


def parse_report_csv(text: str) -> ReportDoc:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    threshold = float(header[4].partition("@")[2])
    doc = ReportDoc(threshold=threshold)
    for row in reader:
        doc.add(ReportRow(row[0], row[1], row[2], *(float(v) for v in row[3:7])))
    return doc
