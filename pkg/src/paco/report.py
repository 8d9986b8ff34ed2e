"""Report emission.

Everything here is rebuilt from the trace files: the delimited metrics
table (report.tsv), a Markdown digest (report.md), and PNG figures. Trace
files are the source of truth so reports can be regenerated, and runs of
different methods into the same output directory aggregate naturally.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .attributes import CANONICAL_ORDER
from .errors import PacoError
from .harness import METHODS, MetricRow, rouge1_f
from .providers import MeasurementProviders

_TSV_HEADER = "method\tattribute\tmetric\tvalue\tn"

_UNITS_NOTE = (
    "MAD units: extractiveness and specificity in percentage points, length"
    " in words. Alignment, quality, and ROUGE-1 are fractions in [0, 1];"
    " lower MAD is better, higher alignment is better."
)


def _best_entry(entry: dict) -> tuple[str, dict, float, bool]:
    """(summary, measured, degree, used_fallback_plan) for one method's
    trace, whichever shape it has."""
    if "nodes" in entry:
        best = next(n for n in entry["nodes"] if n["id"] == entry["best_id"])
        return best["summary"], best["measured"], best["degree"], False
    return (
        entry["summary"],
        entry["measured"],
        entry["degree"],
        bool(entry.get("used_fallback_plan", False)),
    )


def load_traces(out_dir: str | Path) -> list[dict]:
    traces_dir = Path(out_dir) / "traces"
    if not traces_dir.is_dir():
        raise PacoError(f"no traces directory under {out_dir}")
    docs = []
    for path in sorted(traces_dir.glob("*.json")):
        docs.append(json.loads(path.read_text(encoding="utf-8")))
    if not docs:
        raise PacoError(f"no trace files in {traces_dir}")
    return docs


def _methods_present(docs: list[dict]) -> list[str]:
    present = {method for doc in docs for method in doc.get("methods", {})}
    ordered = [m for m in METHODS if m in present]
    ordered += sorted(present.difference(METHODS))
    return ordered


def rows_from_traces(
    docs: list[dict], providers: MeasurementProviders
) -> list[MetricRow]:
    """Recompute the full metrics table from trace documents."""
    rows: list[MetricRow] = []
    for method in _methods_present(docs):
        entries = []
        total = 0
        for doc in docs:
            entry = doc["methods"].get(method)
            if entry is None:
                continue
            total += 1
            if "error" in entry:
                continue
            summary, measured, degree, fallback = _best_entry(entry)
            entries.append((doc, summary, measured, degree, fallback))

        for kind in CANONICAL_ORDER:
            values = []
            for doc, _summary, measured, _degree, _fb in entries:
                targets = doc.get("targets", {})
                key = "topic_words" if kind.value == "topic" else kind.value
                if key not in targets or kind.value not in measured:
                    continue
                value = float(measured[kind.value])
                if kind.deterministic:
                    values.append(abs(value - float(targets[key])))
                else:
                    values.append(value)
            if not values:
                continue
            metric = "mad" if kind.deterministic else "alignment"
            rows.append(
                MetricRow(
                    method, kind.value, metric, sum(values) / len(values), len(values)
                )
            )

        degrees = [degree for _doc, _s, _m, degree, _fb in entries]
        if degrees:
            rows.append(
                MetricRow(
                    method,
                    "overall",
                    "mean_degree",
                    sum(degrees) / len(degrees),
                    len(degrees),
                )
            )

        rouge_scores = []
        quality_scores = []
        for doc, summary, _m, _d, _fb in entries:
            reference = doc.get("reference_summary")
            if not reference:
                continue
            rouge_scores.append(rouge1_f(summary, reference))
            quality_scores.append(providers.embedder.pair_score(summary, reference))
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

        rows.append(
            MetricRow(
                method,
                "overall",
                "coverage",
                len(entries) / total if total else 0.0,
                total,
            )
        )
        if method in ("explicit", "explicit-adaptive"):
            fallbacks = sum(1 for *_rest, fb in entries if fb)
            rows.append(
                MetricRow(
                    method, "overall", "fallback_plans", float(fallbacks), len(entries)
                )
            )
    return rows


def format_tsv(rows: list[MetricRow]) -> str:
    lines = [_TSV_HEADER]
    for row in rows:
        lines.append(
            f"{row.method}\t{row.attribute}\t{row.metric}\t{row.value:.6f}\t{row.n}"
        )
    return "\n".join(lines) + "\n"


def format_markdown(rows: list[MetricRow], config_echo: dict | None = None) -> str:
    lines = ["# Control evaluation report", ""]
    if config_echo:
        lines += [
            "## Run configuration",
            "",
            "```json",
            json.dumps(config_echo, indent=2, sort_keys=True),
            "```",
            "",
        ]
    lines += [
        "## Metrics",
        "",
        "| method | attribute | metric | value | n |",
        "| --- | --- | --- | --- | --- |",
    ]
    for row in rows:
        lines.append(
            f"| {row.method} | {row.attribute} | {row.metric} |"
            f" {row.value:.6f} | {row.n} |"
        )
    lines += [
        "",
        _UNITS_NOTE,
        "",
        "Figures: `figures/mad_deterministic.png`,"
        " `figures/alignment_nondeterministic.png`,"
        " `figures/degree_by_method.png` (each written only when its metric"
        " is present).",
        "",
    ]
    return "\n".join(lines)


def _grouped_bars(rows, metric, title, ylabel, path):
    data = [r for r in rows if r.metric == metric]
    if not data:
        return None
    attributes = sorted({r.attribute for r in data}, key=lambda a: a)
    methods = []
    for row in data:
        if row.method not in methods:
            methods.append(row.method)
    width = 0.8 / len(methods)
    fig, ax = plt.subplots(figsize=(7, 4))
    for index, method in enumerate(methods):
        xs, ys = [], []
        for a_index, attribute in enumerate(attributes):
            match = [
                r for r in data if r.method == method and r.attribute == attribute
            ]
            if match:
                xs.append(a_index + index * width)
                ys.append(match[0].value)
        ax.bar(xs, ys, width=width, label=method)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(attributes))])
    ax.set_xticklabels(attributes)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def _degree_bars(rows, path):
    data = [r for r in rows if r.metric == "mean_degree"]
    if not data:
        return None
    fig, ax = plt.subplots(figsize=(7, 4))
    methods = [r.method for r in data]
    values = [r.value for r in data]
    ax.bar(methods, values)
    if max(values) > 0 and max(values) / max(min(values), 1e-12) > 1e3:
        ax.set_yscale("log")
    ax.set_title("Mean control degree by method")
    ax.set_ylabel("degree")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def render_figures(rows: list[MetricRow], out_dir: str | Path) -> list[Path]:
    figures_dir = Path(out_dir) / "figures"
    figures_dir.mkdir(parents=True, exist_ok=True)
    written = []
    produced = _grouped_bars(
        rows,
        "mad",
        "Mean absolute deviation (lower is better)",
        "MAD",
        figures_dir / "mad_deterministic.png",
    )
    if produced:
        written.append(produced)
    produced = _grouped_bars(
        rows,
        "alignment",
        "Non-deterministic alignment (higher is better)",
        "alignment",
        figures_dir / "alignment_nondeterministic.png",
    )
    if produced:
        written.append(produced)
    produced = _degree_bars(rows, figures_dir / "degree_by_method.png")
    if produced:
        written.append(produced)
    return written


def write_report(
    out_dir: str | Path,
    providers: MeasurementProviders | None = None,
    config_echo: dict | None = None,
) -> dict:
    """Rebuild report.tsv, report.md, and figures from the trace files."""
    out = Path(out_dir)
    providers = providers or MeasurementProviders.fallback()
    docs = load_traces(out)
    rows = rows_from_traces(docs, providers)
    tsv_path = out / "report.tsv"
    tsv_path.write_text(format_tsv(rows), encoding="utf-8")
    md_path = out / "report.md"
    md_path.write_text(format_markdown(rows, config_echo), encoding="utf-8")
    figures = render_figures(rows, out)
    return {
        "rows": rows,
        "tsv": tsv_path,
        "markdown": md_path,
        "figures": figures,
    }
