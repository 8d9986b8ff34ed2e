"""Prompt templates: packaged assets, placeholder substitution, and the
composition of the initial instruction sentence.

Templates are UTF-8 text files keyed by id (the file stem). The packaged
defaults can be overridden by pointing a library at a directory containing
files with the same names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .attributes import AttributeKind, AttributeTarget
from .errors import MissingBinding

_PLACEHOLDER_RE = re.compile(r"\{\{([^{}]+)\}\}")

TEMPLATE_IDS = (
    "initial",
    "extractiveness",
    "length",
    "specificity",
    "topic",
    "speaker",
    "implicit_plan",
    "explicit_plan",
    "explicit_plan_adaptive",
    "heuristic",
)


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    text: str

    def placeholders(self) -> list[str]:
        seen = []
        for match in _PLACEHOLDER_RE.finditer(self.text):
            name = match.group(1)
            if name not in seen:
                seen.append(name)
        return seen


def render_prompt(template: PromptTemplate, bindings: Mapping[str, str]) -> str:
    """Substitute every placeholder; unmatched placeholders are an error."""

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        if name not in bindings:
            raise MissingBinding(name)
        return str(bindings[name])

    return _PLACEHOLDER_RE.sub(substitute, template.text)


class PromptLibrary:
    """Loads templates from the packaged assets, with optional directory
    overrides."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory) if directory else None
        self._cache: dict[str, PromptTemplate] = {}

    def get(self, template_id: str) -> PromptTemplate:
        if template_id not in self._cache:
            self._cache[template_id] = PromptTemplate(
                template_id, self._load(template_id)
            )
        return self._cache[template_id]

    def _load(self, template_id: str) -> str:
        name = f"{template_id}.txt"
        if self.directory is not None:
            override = self.directory / name
            if override.exists():
                return override.read_text(encoding="utf-8")
        asset = resources.files("paco").joinpath("prompts").joinpath(name)
        try:
            return asset.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise KeyError(f"unknown prompt template {template_id!r}") from None


def format_target_value(target: AttributeTarget) -> str:
    """Human-readable binding for a target value inside a prompt."""
    kind, value = target.kind, target.value
    if kind is AttributeKind.LENGTH:
        return str(int(value))
    if kind in (AttributeKind.EXTRACTIVENESS, AttributeKind.SPECIFICITY):
        return f"{float(value):g}%"
    if kind is AttributeKind.TOPIC:
        return ", ".join(value)
    return str(value)


def format_target_attributes(targets: Iterable[AttributeTarget]) -> str:
    """The {{target attributes}} binding: a name=value list."""
    parts = []
    for target in targets:
        rendered = format_target_value(target)
        if target.kind is AttributeKind.LENGTH:
            rendered += " words"
        parts.append(f"{target.kind.value}={rendered}")
    return ", ".join(parts)


def initial_instruction(targets: Iterable[AttributeTarget]) -> str:
    """Compose the initial instruction sentence for the requested subset.

    With all five attributes requested the composition reproduces the
    packaged initial template's sentence exactly (unit-tested), so the
    full-request path and subset paths share one source of truth.
    """
    by_kind = {t.kind: t for t in targets}
    if not by_kind:
        raise ValueError("at least one target required")
    sentence = "Summarize the above article"
    length = by_kind.get(AttributeKind.LENGTH)
    if length is not None:
        sentence += f" in exactly {format_target_value(length)} words"
    topic = by_kind.get(AttributeKind.TOPIC)
    speaker = by_kind.get(AttributeKind.SPEAKER)
    if topic is not None and speaker is not None:
        sentence += (
            f" focusing on {format_target_value(topic)}"
            f" and {format_target_value(speaker)}"
        )
    elif topic is not None:
        sentence += f" focusing on {format_target_value(topic)}"
    elif speaker is not None:
        sentence += f" focusing on {format_target_value(speaker)}"
    extractiveness = by_kind.get(AttributeKind.EXTRACTIVENESS)
    if extractiveness is not None:
        sentence += (
            f" while retaining {format_target_value(extractiveness)}"
            " of the words verbatim from the article"
        )
    specificity = by_kind.get(AttributeKind.SPECIFICITY)
    if specificity is not None:
        if extractiveness is not None:
            joiner = ", and"
        elif len(by_kind) > 1:
            joiner = " and"
        else:
            joiner = ""
        sentence += (
            f"{joiner} including {format_target_value(specificity)}"
            " of the detailed information based on named entities"
        )
    sentence += (
        ". Ensure the summary is well-written, logically sound,"
        " with clear sentence flow."
    )
    return sentence
