"""Comparison systems: single-pass generation, implicit self-planning
(one revision with the model ordering attributes internally), and explicit
self-planning where a parsed plan drives sequential adjustments."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .attributes import (
    AttributeKind,
    AttributeVector,
    CANONICAL_ORDER,
    Document,
    kind_from_name,
    measure_all,
)
from .errors import PacoError, PlanParseFailure
from .policy import HistoryStep, PolicyProvider
from .providers import MeasurementProviders
from .reward import DegreeBreakdown, RewardConfig, degree

_BRACKETED = re.compile(r"\[([^\[\]]*)\]", re.DOTALL)


def parse_plan(
    text: str,
    requested: Sequence[AttributeKind],
    allow_repeats: bool,
) -> list[AttributeKind]:
    """Attribute order from the first bracketed list in the plan text.

    Elements match attribute names or short forms case-insensitively; an
    unrecognized element fails the parse. Elements naming attributes the
    document never requested are dropped; an empty result fails too. With
    ``allow_repeats`` false, repeats collapse to their first occurrence.
    """
    match = _BRACKETED.search(text)
    if match is None:
        raise PlanParseFailure("no bracketed plan found")
    items = [piece.strip().strip("'\"`") for piece in match.group(1).split(",")]
    items = [item for item in items if item]
    if not items:
        raise PlanParseFailure("plan list is empty")
    kinds = []
    for item in items:
        try:
            kinds.append(kind_from_name(item))
        except KeyError:
            raise PlanParseFailure(f"unknown attribute {item!r} in plan") from None
    wanted = set(requested)
    kinds = [kind for kind in kinds if kind in wanted]
    if not kinds:
        raise PlanParseFailure("plan names no requested attribute")
    if not allow_repeats:
        seen = set()
        deduped = []
        for kind in kinds:
            if kind not in seen:
                seen.add(kind)
                deduped.append(kind)
        kinds = deduped
    return kinds


def fallback_plan(requested: Sequence[AttributeKind]) -> list[AttributeKind]:
    """Fixed attribute order restricted to the requested set."""
    wanted = set(requested)
    return [kind for kind in CANONICAL_ORDER if kind in wanted]


@dataclass
class BaselineStep:
    action: AttributeKind
    summary: str
    measured: AttributeVector | None
    degree: float | None


@dataclass
class BaselineResult:
    method: str
    doc: Document
    summary: str
    measured: AttributeVector
    breakdown: DegreeBreakdown
    initial_summary: str
    steps: list[BaselineStep] = field(default_factory=list)
    plan: list[AttributeKind] | None = None
    raw_plan: str | None = None
    used_fallback_plan: bool = False
    policy_calls: int = 0


class _Runner:
    def __init__(
        self,
        doc: Document,
        policy: PolicyProvider,
        providers: MeasurementProviders,
        reward: RewardConfig,
    ):
        self.doc = doc
        self.policy = policy
        self.providers = providers
        self.reward = reward
        self.targets = tuple(doc.target_for(k) for k in doc.requested_kinds())

    def score(self, summary: str):
        measured = measure_all(summary, self.doc, self.providers)
        return measured, degree(measured, self.targets, self.reward)

    def try_score(self, summary: str):
        # intermediate summaries are recorded best-effort, never control
        try:
            return self.score(summary)
        except PacoError:
            return None, None


def single_pass(
    doc: Document,
    policy: PolicyProvider,
    providers: MeasurementProviders,
    reward: RewardConfig | None = None,
) -> BaselineResult:
    runner = _Runner(doc, policy, providers, reward or RewardConfig())
    summary = policy.generate_initial(doc, runner.targets)
    measured, breakdown = runner.score(summary)
    return BaselineResult(
        method="single",
        doc=doc,
        summary=summary,
        measured=measured,
        breakdown=breakdown,
        initial_summary=summary,
        policy_calls=1,
    )


def implicit_plan(
    doc: Document,
    policy: PolicyProvider,
    providers: MeasurementProviders,
    reward: RewardConfig | None = None,
) -> BaselineResult:
    runner = _Runner(doc, policy, providers, reward or RewardConfig())
    initial = policy.generate_initial(doc, runner.targets)
    history = [HistoryStep(None, initial)]
    revised = policy.revise_with_implicit_plan(doc, history, runner.targets)
    measured, breakdown = runner.score(revised)
    return BaselineResult(
        method="implicit",
        doc=doc,
        summary=revised,
        measured=measured,
        breakdown=breakdown,
        initial_summary=initial,
        policy_calls=2,
    )


def explicit_plan(
    doc: Document,
    policy: PolicyProvider,
    providers: MeasurementProviders,
    reward: RewardConfig | None = None,
    adaptive: bool = False,
) -> BaselineResult:
    runner = _Runner(doc, policy, providers, reward or RewardConfig())
    initial = policy.generate_initial(doc, runner.targets)
    calls = 1
    history = [HistoryStep(None, initial)]
    requested = doc.requested_kinds()

    plan = None
    raw = None
    for _ in range(2):  # one reprompt after a failed parse
        raw = policy.propose_plan(doc, history, runner.targets, adaptive)
        try:
            plan = parse_plan(raw, requested, allow_repeats=adaptive)
            break
        except PlanParseFailure:
            continue
    used_fallback = plan is None
    if used_fallback:
        plan = fallback_plan(requested)

    steps = []
    for action in plan:
        summary = policy.adjust(runner.doc, history, runner.targets, action)
        calls += 1
        history.append(HistoryStep(action, summary))
        measured, breakdown = runner.try_score(summary)
        steps.append(
            BaselineStep(
                action=action,
                summary=summary,
                measured=measured,
                degree=None if breakdown is None else breakdown.degree,
            )
        )

    final = history[-1].summary
    measured, breakdown = runner.score(final)
    return BaselineResult(
        method="explicit-adaptive" if adaptive else "explicit",
        doc=doc,
        summary=final,
        measured=measured,
        breakdown=breakdown,
        initial_summary=initial,
        steps=steps,
        plan=plan,
        raw_plan=raw,
        used_fallback_plan=used_fallback,
        policy_calls=calls,
    )


def baseline_trace(result: BaselineResult) -> dict:
    """JSON-ready record mirroring the search trace's level of detail."""
    return {
        "method": result.method,
        "summary": result.summary,
        "measured": {k.value: v for k, v in result.measured.items()},
        "degree": result.breakdown.degree,
        "initial_summary": result.initial_summary,
        "steps": [
            {
                "action": step.action.code,
                "summary": step.summary,
                "measured": None
                if step.measured is None
                else {k.value: v for k, v in step.measured.items()},
                "degree": step.degree,
            }
            for step in result.steps
        ],
        "plan": None if result.plan is None else [k.code for k in result.plan],
        "used_fallback_plan": result.used_fallback_plan,
        "policy_calls": result.policy_calls,
    }
