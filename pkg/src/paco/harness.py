"""Corpus ingestion, per-document method runs, metric aggregation, and
trace persistence. The report files themselves are written by the report
module from the traces this module produces."""

from __future__ import annotations

import json
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .attributes import (
    AttributeKind,
    AttributeTarget,
    AttributeVector,
    CANONICAL_ORDER,
    Document,
    Utterance,
    tokenize,
)
from .baselines import (
    BaselineResult,
    baseline_trace,
    explicit_plan,
    implicit_plan,
    single_pass,
)
from .errors import DuplicateId, EmptyText, PacoError, SchemaError
from .policy import PolicyProvider
from .providers import MeasurementProviders
from .reward import RewardConfig
from .search import SearchConfig, run_search, search_trace

METHODS = ("paco", "single", "implicit", "explicit", "explicit-adaptive")

_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")

_TARGET_KEYS = {
    "extractiveness": AttributeKind.EXTRACTIVENESS,
    "length": AttributeKind.LENGTH,
    "specificity": AttributeKind.SPECIFICITY,
    "topic_words": AttributeKind.TOPIC,
    "speaker": AttributeKind.SPEAKER,
}
_TARGET_ORDER = ("extractiveness", "length", "specificity", "topic_words", "speaker")


@dataclass(frozen=True)
class CorpusRecord:
    doc: Document
    dataset: str | None = None
    split: str | None = None


def _parse_record(payload: dict, line_number: int) -> CorpusRecord:
    def fail(message: str):
        raise SchemaError(f"line {line_number}: {message}")

    if not isinstance(payload, dict):
        fail("record must be a JSON object")
    doc_id = payload.get("id")
    if not isinstance(doc_id, str) or not _ID_RE.match(doc_id):
        fail("id must match [A-Za-z0-9._-]+")
    text = payload.get("text")
    if not isinstance(text, str) or not text.strip():
        fail("text must be a non-empty string")
    raw_targets = payload.get("targets")
    if not isinstance(raw_targets, dict) or not raw_targets:
        fail("targets must be a non-empty object")
    targets = []
    for key, value in raw_targets.items():
        kind = _TARGET_KEYS.get(key)
        if kind is None:
            fail(f"unknown target {key!r}")
        try:
            if kind is AttributeKind.LENGTH:
                target = AttributeTarget(kind, int(value))
            elif kind is AttributeKind.TOPIC:
                target = AttributeTarget(kind, tuple(value))
            elif kind is AttributeKind.SPEAKER:
                target = AttributeTarget(kind, str(value))
            else:
                target = AttributeTarget(kind, float(value))
        except (TypeError, ValueError) as err:
            fail(f"bad target {key!r}: {err}")
        targets.append(target)

    utterances = []
    raw_utterances = payload.get("utterances", [])
    if not isinstance(raw_utterances, list):
        fail("utterances must be a list")
    for item in raw_utterances:
        if (
            not isinstance(item, dict)
            or not isinstance(item.get("speaker"), str)
            or not isinstance(item.get("text"), str)
        ):
            fail("each utterance needs string speaker and text")
        utterances.append(Utterance(item["speaker"], item["text"]))

    reference = payload.get("reference_summary")
    if reference is not None and (
        not isinstance(reference, str) or not reference.strip()
    ):
        fail("reference_summary must be a non-empty string when present")

    try:
        doc = Document(
            id=doc_id,
            text=text,
            targets=tuple(targets),
            utterances=tuple(utterances),
            reference_summary=reference,
        )
    except ValueError as err:
        fail(str(err))
    return CorpusRecord(
        doc=doc, dataset=payload.get("dataset"), split=payload.get("split")
    )


def load_corpus(path: str | Path) -> list[CorpusRecord]:
    """Parse a JSON-lines corpus; every error names its line."""
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except ValueError as err:
                raise SchemaError(f"line {line_number}: invalid JSON: {err}") from None
            record = _parse_record(payload, line_number)
            if record.doc.id in seen:
                raise DuplicateId(
                    f"line {line_number}: duplicate id {record.doc.id!r}"
                )
            seen.add(record.doc.id)
            records.append(record)
    return records


def serialize_targets(doc: Document) -> dict:
    out = {}
    for key in _TARGET_ORDER:
        kind = _TARGET_KEYS[key]
        target = doc.target_for(kind)
        if target is None:
            continue
        out[key] = list(target.value) if kind is AttributeKind.TOPIC else target.value
    return out


def serialize_record(record: CorpusRecord) -> str:
    """One canonical JSON line; load -> serialize round-trips bytes."""
    payload: dict = {
        "id": record.doc.id,
        "text": record.doc.text,
        "targets": serialize_targets(record.doc),
    }
    if record.doc.utterances:
        payload["utterances"] = [
            {"speaker": u.speaker, "text": u.text} for u in record.doc.utterances
        ]
    if record.doc.reference_summary is not None:
        payload["reference_summary"] = record.doc.reference_summary
    if record.dataset is not None:
        payload["dataset"] = record.dataset
    if record.split is not None:
        payload["split"] = record.split
    return json.dumps(payload, ensure_ascii=False)


def serialize_corpus(records: Sequence[CorpusRecord]) -> str:
    return "".join(serialize_record(record) + "\n" for record in records)


def rouge1_f(candidate: str, reference: str) -> float:
    """Unigram F1 with clipped counts."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        raise EmptyText("rouge needs non-empty texts")
    overlap_counts = Counter(cand) & Counter(ref)
    overlap = sum(overlap_counts.values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(cand)
    recall = overlap / len(ref)
    return 2 * precision * recall / (precision + recall)


@dataclass
class DocOutcome:
    record: CorpusRecord
    method: str
    summary: str | None = None
    measured: AttributeVector | None = None
    degree: float | None = None
    used_fallback_plan: bool = False
    policy_calls: int = 0
    trace: dict | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class MetricRow:
    method: str
    attribute: str
    metric: str
    value: float
    n: int


@dataclass
class RunReport:
    method: str
    rows: list[MetricRow]
    outcomes: list[DocOutcome]
    config_echo: dict = field(default_factory=dict)


def run_method(
    record: CorpusRecord,
    method: str,
    policy: PolicyProvider,
    providers: MeasurementProviders,
    search_config: SearchConfig,
    reward: RewardConfig,
) -> DocOutcome:
    """One document through one method; failures are captured, not raised."""
    doc = record.doc
    outcome = DocOutcome(record=record, method=method)
    try:
        if method == "paco":
            result = run_search(doc, policy, providers, search_config)
            outcome.summary = result.best.summary
            outcome.measured = result.best.measured
            outcome.degree = result.best.breakdown.degree
            outcome.policy_calls = result.policy_calls
            outcome.trace = search_trace(result)
        else:
            baseline = _run_baseline(doc, method, policy, providers, reward)
            outcome.summary = baseline.summary
            outcome.measured = baseline.measured
            outcome.degree = baseline.breakdown.degree
            outcome.used_fallback_plan = baseline.used_fallback_plan
            outcome.policy_calls = baseline.policy_calls
            outcome.trace = baseline_trace(baseline)
    except PacoError as err:
        outcome.error = f"{type(err).__name__}: {err}"
    return outcome


def _run_baseline(doc, method, policy, providers, reward) -> BaselineResult:
    if method == "single":
        return single_pass(doc, policy, providers, reward)
    if method == "implicit":
        return implicit_plan(doc, policy, providers, reward)
    if method == "explicit":
        return explicit_plan(doc, policy, providers, reward, adaptive=False)
    if method == "explicit-adaptive":
        return explicit_plan(doc, policy, providers, reward, adaptive=True)
    raise PacoError(f"unknown method {method!r}")


def metric_rows(
    method: str,
    outcomes: Sequence[DocOutcome],
    providers: MeasurementProviders,
) -> list[MetricRow]:
    """Aggregate one method's outcomes in a fixed row order."""
    ok = [o for o in outcomes if o.ok]
    rows = []
    for kind in CANONICAL_ORDER:
        values = []
        for outcome in ok:
            target = outcome.record.doc.target_for(kind)
            if target is None or kind not in outcome.measured:
                continue
            measured = float(outcome.measured[kind])
            if kind.deterministic:
                values.append(abs(measured - float(target.value)))
            else:
                values.append(measured)
        if not values:
            continue
        metric = "mad" if kind.deterministic else "alignment"
        rows.append(
            MetricRow(method, kind.value, metric, sum(values) / len(values), len(values))
        )

    degrees = [o.degree for o in ok]
    if degrees:
        rows.append(
            MetricRow(
                method, "overall", "mean_degree", sum(degrees) / len(degrees), len(degrees)
            )
        )

    rouge_scores = []
    quality_scores = []
    for outcome in ok:
        reference = outcome.record.doc.reference_summary
        if reference is None:
            continue
        rouge_scores.append(rouge1_f(outcome.summary, reference))
        quality_scores.append(providers.embedder.pair_score(outcome.summary, reference))
    if rouge_scores:
        rows.append(
            MetricRow(
                method,
                "overall",
                "rouge1_f",
                sum(rouge_scores) / len(rouge_scores),
                len(rouge_scores),
            )
        )
    if quality_scores:
        rows.append(
            MetricRow(
                method,
                "overall",
                "quality",
                sum(quality_scores) / len(quality_scores),
                len(quality_scores),
            )
        )

    total = len(outcomes)
    rows.append(
        MetricRow(method, "overall", "coverage", len(ok) / total if total else 0.0, total)
    )
    if method in ("explicit", "explicit-adaptive"):
        fallbacks = sum(1 for o in ok if o.used_fallback_plan)
        rows.append(MetricRow(method, "overall", "fallback_plans", float(fallbacks), len(ok)))
    return rows


def evaluate_corpus(
    records: Sequence[CorpusRecord],
    method: str,
    policy: PolicyProvider,
    providers: MeasurementProviders,
    search_config: SearchConfig | None = None,
    reward: RewardConfig | None = None,
    jobs: int = 1,
    out_dir: str | Path | None = None,
    config_echo: dict | None = None,
) -> RunReport:
    """Run every record through ``method``; optionally persist traces."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    search_config = search_config or SearchConfig()
    reward = reward or search_config.reward

    def job(record: CorpusRecord) -> DocOutcome:
        return run_method(record, method, policy, providers, search_config, reward)

    if jobs <= 1 or len(records) <= 1:
        outcomes = [job(record) for record in records]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(job, records))

    if out_dir is not None:
        write_traces(outcomes, out_dir)
    rows = metric_rows(method, outcomes, providers)
    return RunReport(
        method=method,
        rows=rows,
        outcomes=outcomes,
        config_echo=dict(config_echo or {}),
    )


def trace_path(out_dir: str | Path, doc_id: str) -> Path:
    return Path(out_dir) / "traces" / f"{doc_id}.json"


def write_traces(outcomes: Sequence[DocOutcome], out_dir: str | Path) -> list[Path]:
    """One JSON file per document holding a per-method map; existing files
    gain/replace this method's entry so methods can be run one at a time."""
    paths = []
    for outcome in outcomes:
        path = trace_path(out_dir, outcome.record.doc.id)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.exists():
            document = json.loads(path.read_text(encoding="utf-8"))
        else:
            doc = outcome.record.doc
            document = {
                "id": doc.id,
                "targets": serialize_targets(doc),
                "reference_summary": doc.reference_summary,
                "methods": {},
            }
        if outcome.ok:
            document["methods"][outcome.method] = outcome.trace
        else:
            document["methods"][outcome.method] = {"error": outcome.error}
        path.write_text(
            json.dumps(document, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        paths.append(path)
    return paths
