"""Command-line interface.

Subcommands: ``run`` evaluates a corpus with one method and writes traces
plus the report files; ``search`` runs the tree search on one document;
``measure`` scores a provided summary against a document's targets;
``report`` rebuilds the report files from existing traces.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from pathlib import Path

from .attributes import kind_from_name, measure_all
from .errors import PacoError
from .harness import (
    METHODS,
    evaluate_corpus,
    load_corpus,
    run_method,
    trace_path,
    write_traces,
)
from .policy import HttpChatPolicy, PolicyConfig, SurrogatePolicy
from .providers import MeasurementProviders
from .report import write_report
from .reward import RewardConfig
from .search import SearchConfig

PROVIDERS = ("http", "scripted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paco",
        description=(
            "Multi-attribute controllable summarization via tree search"
            " over summary adjustments."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_method=False):
        p.add_argument("--corpus", required=True, help="JSON-lines corpus path")
        if with_method:
            p.add_argument(
                "--method",
                choices=METHODS,
                default="paco",
                help="generation method to evaluate",
            )
        p.add_argument(
            "--provider",
            choices=PROVIDERS,
            default="scripted",
            help=(
                "text policy: 'http' talks to a chat-completions endpoint"
                " (PACO_LLM_BASE_URL); 'scripted' is the offline surrogate"
            ),
        )
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="base RNG seed")

    run_p = sub.add_parser("run", help="evaluate a corpus and write a report")
    add_common(run_p, with_method=True)
    run_p.add_argument(
        "--jobs", type=int, default=1, help="concurrent document runs"
    )

    search_p = sub.add_parser("search", help="run the tree search on one document")
    add_common(search_p)
    search_p.add_argument("--id", help="document id (default: first record)")

    measure_p = sub.add_parser(
        "measure", help="measure a summary against a document's targets"
    )
    measure_p.add_argument("--corpus", required=True)
    measure_p.add_argument("--id", help="document id (default: first record)")
    group = measure_p.add_mutually_exclusive_group(required=True)
    group.add_argument("--summary", help="summary text")
    group.add_argument("--summary-file", help="file containing the summary")

    report_p = sub.add_parser(
        "report", help="rebuild report files from existing traces"
    )
    report_p.add_argument("--out", default="out", help="directory holding traces/")
    return parser


def load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        raw = json.load(handle)
    if not isinstance(raw, dict):
        raise PacoError("config file must hold a JSON object")
    return raw


def make_reward(raw: dict) -> RewardConfig:
    kwargs = {}
    for key in ("alpha", "beta", "epsilon", "nondet_floor"):
        if key in raw:
            kwargs[key] = float(raw[key])
    if "value_mode" in raw:
        kwargs["value_mode"] = raw["value_mode"]
    if "tolerances" in raw:
        tolerances = dict(RewardConfig().tolerances)
        for name, value in raw["tolerances"].items():
            tolerances[kind_from_name(name)] = float(value)
        kwargs["tolerances"] = tolerances
    return RewardConfig(**kwargs)


def make_search_config(raw: dict) -> SearchConfig:
    kwargs = {}
    if "simulations" in raw:
        kwargs["simulations"] = int(raw["simulations"])
    if "max_depth" in raw:
        kwargs["max_depth"] = int(raw["max_depth"])
    for key in ("c_base", "c_init"):
        if key in raw:
            kwargs[key] = float(raw[key])
    return SearchConfig(reward=make_reward(raw), **kwargs)


def make_policy(provider: str, raw: dict):
    if provider == "scripted":
        return SurrogatePolicy()
    policy_raw = raw.get("policy", {})
    return HttpChatPolicy(PolicyConfig(**policy_raw))


def make_measurers() -> MeasurementProviders:
    if os.environ.get("PACO_SIDECAR_URL"):
        return MeasurementProviders.http()
    return MeasurementProviders.fallback()


def _select_record(records, doc_id):
    if doc_id is None:
        return records[0]
    for record in records:
        if record.doc.id == doc_id:
            return record
    raise PacoError(f"no record with id {doc_id!r}")


def cmd_run(args) -> int:
    random.seed(args.seed)
    raw = load_config_file(args.config)
    records = load_corpus(args.corpus)
    policy = make_policy(args.provider, raw)
    providers = make_measurers()
    search_config = make_search_config(raw)
    echo = {
        "command": "run",
        "corpus": str(args.corpus),
        "method": args.method,
        "provider": args.provider,
        "jobs": args.jobs,
        "seed": args.seed,
        "simulations": search_config.simulations,
        "max_depth": search_config.max_depth,
        "value_mode": search_config.reward.value_mode,
    }
    report = evaluate_corpus(
        records,
        args.method,
        policy,
        providers,
        search_config=search_config,
        reward=search_config.reward,
        jobs=args.jobs,
        out_dir=args.out,
        config_echo=echo,
    )
    written = write_report(args.out, providers, echo)
    succeeded = sum(1 for o in report.outcomes if o.ok)
    print(f"evaluated {len(report.outcomes)} document(s); {succeeded} succeeded")
    for outcome in report.outcomes:
        if not outcome.ok:
            print(f"  {outcome.record.doc.id}: {outcome.error}", file=sys.stderr)
    print(f"wrote {written['tsv']}")
    print(f"wrote {written['markdown']}")
    for figure in written["figures"]:
        print(f"wrote {figure}")
    return 0 if succeeded else 1


def cmd_search(args) -> int:
    random.seed(args.seed)
    raw = load_config_file(args.config)
    records = load_corpus(args.corpus)
    record = _select_record(records, args.id)
    policy = make_policy(args.provider, raw)
    providers = make_measurers()
    search_config = make_search_config(raw)
    outcome = run_method(
        record, "paco", policy, providers, search_config, search_config.reward
    )
    if not outcome.ok:
        print(outcome.error, file=sys.stderr)
        return 1
    write_traces([outcome], args.out)
    print(outcome.summary)
    print(f"degree: {outcome.degree:.6f}")
    print(f"trace: {trace_path(args.out, record.doc.id)}")
    return 0


def cmd_measure(args) -> int:
    records = load_corpus(args.corpus)
    record = _select_record(records, args.id)
    if args.summary is not None:
        summary = args.summary
    else:
        summary = Path(args.summary_file).read_text(encoding="utf-8")
    measured = measure_all(summary, record.doc, make_measurers())
    printable = {kind.value: value for kind, value in measured.items()}
    print(json.dumps(printable, indent=2, sort_keys=True))
    return 0


def cmd_report(args) -> int:
    written = write_report(args.out, make_measurers())
    print(f"wrote {written['tsv']}")
    print(f"wrote {written['markdown']}")
    for figure in written["figures"]:
        print(f"wrote {figure}")
    return 0


_COMMANDS = {
    "run": cmd_run,
    "search": cmd_search,
    "measure": cmd_measure,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except PacoError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
