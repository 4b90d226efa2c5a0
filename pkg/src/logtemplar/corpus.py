"""Corpus ingestion, the ground-truth oracle annotator, and accuracy metrics.

Two input formats are supported:

* ``logpai_csv``: a CSV with ``Content`` (raw log) and ``EventTemplate``
  columns; the ``<*>`` wildcard maps to the VAR placeholder and every other
  token is kept as a keyword.
* ``jsonl``: one ``{"log": ..., "template": ...}`` object per line with the
  template in canonical grammar (``template`` may be omitted for unlabeled
  corpora).

Metrics follow the all-or-nothing template-group reading: a predicted
template counts for precision only when every log predicted as it has that
exact ground truth, and a ground-truth template counts for recall only when
every one of its logs was predicted exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    FormatError,
    MissingColumnError,
    NoGroundTruthError,
    UnknownIdError,
)
from .model import (
    LogRecord,
    Template,
    TypeCatalog,
    keyword,
    parse_template,
    placeholder,
    tokenize_log,
)

# Wildcard used by LogPAI-style ground truth files.
WILDCARD = "<*>"
MISSING_TEMPLATE_KEY = "!MISSING!"


@dataclass
class Corpus:
    records: list[LogRecord]
    ground_truth: dict[int, Template] = field(default_factory=dict)
    template_index: dict[str, set[int]] = field(default_factory=dict)
    catalog: TypeCatalog = field(default_factory=TypeCatalog)

    def by_id(self, log_id: int) -> LogRecord:
        for rec in self.records:
            if rec.id == log_id:
                return rec
        raise UnknownIdError(f"no log with id {log_id}")

    def record_map(self) -> dict[int, LogRecord]:
        return {rec.id: rec for rec in self.records}

    def has_ground_truth(self) -> bool:
        return bool(self.ground_truth)


@dataclass(frozen=True)
class EvalReport:
    mla: float
    pta: float
    rta: float
    correct_logs: int
    total_logs: int
    predicted_templates: int
    ground_truth_templates: int

    def to_dict(self) -> dict:
        return {
            "mla": self.mla,
            "pta": self.pta,
            "rta": self.rta,
            "correct_logs": self.correct_logs,
            "total_logs": self.total_logs,
            "predicted_templates": self.predicted_templates,
            "ground_truth_templates": self.ground_truth_templates,
        }

    def table(self) -> str:
        rows = [
            ("MLA", f"{self.mla:.4f}", f"{self.correct_logs}/{self.total_logs} logs"),
            ("PTA", f"{self.pta:.4f}", f"{self.predicted_templates} predicted templates"),
            ("RTA", f"{self.rta:.4f}", f"{self.ground_truth_templates} ground-truth templates"),
        ]
        width = max(len(r[2]) for r in rows)
        lines = [f"{name:<4} {value:>8}  {note:<{width}}" for name, value, note in rows]
        return "\n".join(lines)


def _template_from_logpai(event_template: str, content_words: tuple[str, ...]) -> Template:
    tokens = []
    for tok in event_template.split():
        if tok == WILDCARD:
            tokens.append(placeholder("VAR"))
        else:
            tokens.append(keyword(tok))
    del content_words
    return Template(tokens=tuple(tokens))


def ingest(path: str | Path, fmt: str = "auto") -> Corpus:
    """Load a corpus file; ids are assigned in file order starting at 0."""
    path = Path(path)
    if fmt == "auto":
        fmt = "logpai_csv" if path.suffix.lower() == ".csv" else "jsonl"
    if fmt == "logpai_csv":
        return _ingest_logpai_csv(path)
    if fmt == "jsonl":
        return _ingest_jsonl(path)
    raise FormatError(f"unknown corpus format {fmt!r}")


def _ingest_logpai_csv(path: Path) -> Corpus:
    catalog = TypeCatalog()
    records: list[LogRecord] = []
    ground_truth: dict[int, Template] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "Content" not in reader.fieldnames:
            raise MissingColumnError("missing Content column")
        has_truth = "EventTemplate" in reader.fieldnames
        for i, row in enumerate(reader):
            content = (row.get("Content") or "").strip()
            if not content:
                raise FormatError("blank Content", line_no=i + 2)
            rec = tokenize_log(content, record_id=len(records))
            records.append(rec)
            if has_truth:
                raw_template = (row.get("EventTemplate") or "").strip()
                if raw_template:
                    tmpl = _template_from_logpai(raw_template, rec.words)
                    ground_truth[rec.id] = tmpl
                    catalog.observe(tmpl)
    return _finish(records, ground_truth, catalog)


def _ingest_jsonl(path: Path) -> Corpus:
    records: list[LogRecord] = []
    raw_templates: list[tuple[int, str]] = []
    type_names: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad json: {exc}", line_no=i + 1) from exc
            if "log" not in row:
                raise FormatError("missing 'log' key", line_no=i + 1)
            rec = tokenize_log(str(row["log"]), record_id=len(records))
            records.append(rec)
            if row.get("template"):
                text = str(row["template"])
                raw_templates.append((rec.id, text))
                for tok in text.split():
                    if len(tok) >= 3 and tok.startswith("[") and tok.endswith("]"):
                        type_names.add(tok[1:-1])
    catalog = TypeCatalog.with_types(type_names)
    ground_truth: dict[int, Template] = {}
    for log_id, text in raw_templates:
        tmpl = parse_template(text, catalog)
        ground_truth[log_id] = tmpl
        catalog.observe(tmpl)
    return _finish(records, ground_truth, catalog)


def _finish(
    records: list[LogRecord], ground_truth: dict[int, Template], catalog: TypeCatalog
) -> Corpus:
    index: dict[str, set[int]] = {}
    for log_id, tmpl in ground_truth.items():
        index.setdefault(tmpl.render(), set()).add(log_id)
    return Corpus(
        records=records, ground_truth=ground_truth, template_index=index, catalog=catalog
    )


def write_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Serialize a corpus back to the jsonl format (ingest round-trips)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            row: dict = {"log": rec.text}
            tmpl = corpus.ground_truth.get(rec.id)
            if tmpl is not None:
                row["template"] = tmpl.render()
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def oracle_annotate(log_id: int, corpus: Corpus) -> Template:
    """Return the ground-truth template, standing in for a human annotator."""
    tmpl = corpus.ground_truth.get(log_id)
    if tmpl is None:
        raise NoGroundTruthError(f"no ground truth for log {log_id}")
    return tmpl


class OracleAnnotator:
    """Batch annotator backed by corpus ground truth; spends budget like a human."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus

    def annotate(self, log_ids: list[int], round_index: int) -> dict[int, Template]:
        del round_index
        return {log_id: oracle_annotate(log_id, self.corpus) for log_id in log_ids}


def evaluate(predictions: dict[int, Template | None], corpus: Corpus) -> EvalReport:
    """Message-level and template-level accuracy of a prediction map.

    Logs without a prediction count as wrong and contribute one synthetic
    missing template to the predicted-template denominator.
    """
    truth = corpus.ground_truth
    total = len(corpus.records)
    correct = 0
    predicted_groups: dict[str, set[int]] = {}
    rendered: dict[int, str | None] = {}
    for rec in corpus.records:
        pred = predictions.get(rec.id)
        key = pred.render() if pred is not None else MISSING_TEMPLATE_KEY
        predicted_groups.setdefault(key, set()).add(rec.id)
        rendered[rec.id] = None if pred is None else key
        gt = truth.get(rec.id)
        if pred is not None and gt is not None and pred == gt:
            correct += 1
    truth_rendered = {log_id: tmpl.render() for log_id, tmpl in truth.items()}

    pta_hits = 0
    for key, group in predicted_groups.items():
        if key == MISSING_TEMPLATE_KEY:
            continue
        if all(truth_rendered.get(log_id) == key for log_id in group):
            pta_hits += 1

    rta_hits = 0
    for key, group in corpus.template_index.items():
        if all(rendered.get(log_id) == key for log_id in group):
            rta_hits += 1

    n_predicted = len(predicted_groups)
    n_truth = len(corpus.template_index)
    return EvalReport(
        mla=correct / total if total else 0.0,
        pta=pta_hits / n_predicted if n_predicted else 0.0,
        rta=rta_hits / n_truth if n_truth else 0.0,
        correct_logs=correct,
        total_logs=total,
        predicted_templates=n_predicted,
        ground_truth_templates=n_truth,
    )
