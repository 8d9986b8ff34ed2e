"""Text-generation policies.

A policy provides: the initial all-attribute summary, single-attribute
adjustments conditioned on the full history, self-planning calls for the
baselines, and the yes-probability heuristic. Three implementations ship:
an HTTP chat-completions client, a table-driven scripted policy for
fixtures, and a rule-based surrogate that runs fully offline.
"""

from __future__ import annotations

import hashlib
import itertools
import math
import os
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import requests

from .attributes import AttributeKind, AttributeTarget, Document, tokenize
from .errors import EmptyCompletion, HeuristicUnavailable, PolicyFailure
from .prompts import (
    PromptLibrary,
    format_target_attributes,
    format_target_value,
    initial_instruction,
    render_prompt,
)


@dataclass(frozen=True)
class HistoryStep:
    """One tree level: the action that produced the summary (None for the
    root/initial summary) and the summary text."""

    action: AttributeKind | None
    summary: str


History = Sequence[HistoryStep]


def render_history(history: History) -> str:
    """Serialize history oldest-first as "Step i (...):" blocks."""
    blocks = []
    for i, step in enumerate(history):
        label = "initial" if step.action is None else f"adjusted {step.action.value}"
        blocks.append(f"Step {i} ({label}):\n{step.summary}")
    return "\n\n".join(blocks)


def render_path(path: Sequence[AttributeKind]) -> str:
    if not path:
        return "initial"
    return " -> ".join(kind.value for kind in path)


_INITIAL_SCAFFOLD = (
    "You are a helpful assistant. Your task is to generate adjusted summary"
    " for user.\n\narticle:\n{article}\n\n{instruction}\n\n"
    "summary (generate summary ONLY):\n"
)


class PolicyPrompts:
    """Builds every prompt string the policies send.

    When all five attributes are requested the packaged initial template is
    rendered directly; for subsets the same scaffold is filled with a
    composed instruction covering just the requested attributes.
    """

    def __init__(self, library: PromptLibrary | None = None):
        self.library = library or PromptLibrary()

    def initial(self, doc: Document, targets: Sequence[AttributeTarget]) -> str:
        by_kind = {t.kind: t for t in targets}
        if len(by_kind) == len(AttributeKind):
            bindings = {"Article": doc.text}
            for target in targets:
                bindings[target.kind.value] = format_target_value(target)
            return render_prompt(self.library.get("initial"), bindings)
        return _INITIAL_SCAFFOLD.format(
            article=doc.text, instruction=initial_instruction(targets)
        )

    def adjust(
        self,
        doc: Document,
        history: History,
        targets: Sequence[AttributeTarget],
        action: AttributeKind,
    ) -> str:
        target = next(t for t in targets if t.kind is action)
        bindings = {
            "Article": doc.text,
            "History": render_history(history),
            "Previous summary": history[-1].summary,
            action.value: format_target_value(target),
        }
        return render_prompt(self.library.get(action.value), bindings)

    def implicit(
        self, doc: Document, history: History, targets: Sequence[AttributeTarget]
    ) -> str:
        bindings = {
            "Article": doc.text,
            "Initial prompts": initial_instruction(targets),
            "Previous summary": history[-1].summary,
            "target attributes": format_target_attributes(targets),
        }
        return render_prompt(self.library.get("implicit_plan"), bindings)

    def plan(
        self,
        doc: Document,
        history: History,
        targets: Sequence[AttributeTarget],
        adaptive: bool,
    ) -> str:
        template_id = "explicit_plan_adaptive" if adaptive else "explicit_plan"
        bindings = {
            "Article": doc.text,
            "Initial prompts": initial_instruction(targets),
            "Previous summary": history[-1].summary,
            "target attributes": format_target_attributes(targets),
        }
        return render_prompt(self.library.get(template_id), bindings)

    def heuristic(
        self,
        doc: Document,
        summary: str,
        targets: Sequence[AttributeTarget],
        path: Sequence[AttributeKind],
    ) -> str:
        bindings = {
            "Article": doc.text,
            "Summary": summary,
            "target attributes": format_target_attributes(targets),
            "path": render_path(path),
        }
        return render_prompt(self.library.get("heuristic"), bindings)


class PolicyProvider(ABC):
    """Capability bundle around a text generator."""

    @abstractmethod
    def generate_initial(
        self, doc: Document, targets: Sequence[AttributeTarget]
    ) -> str:
        """One summary attempting to control every requested attribute."""

    @abstractmethod
    def adjust(
        self,
        doc: Document,
        history: History,
        targets: Sequence[AttributeTarget],
        action: AttributeKind,
    ) -> str:
        """A new summary adjusting one attribute of the latest summary."""

    @abstractmethod
    def revise_with_implicit_plan(
        self, doc: Document, history: History, targets: Sequence[AttributeTarget]
    ) -> str:
        """One-pass revision where the model orders attributes internally."""

    @abstractmethod
    def propose_plan(
        self,
        doc: Document,
        history: History,
        targets: Sequence[AttributeTarget],
        adaptive: bool,
    ) -> str:
        """Raw plan text; the baselines module parses it."""

    @abstractmethod
    def yes_probability(
        self,
        doc: Document,
        summary: str,
        targets: Sequence[AttributeTarget],
        path: Sequence[AttributeKind],
    ) -> float:
        """P(affirmative) that further adjustments can satisfy all targets."""

    def action_priors(
        self, doc: Document, summary: str, legal: Sequence[AttributeKind]
    ) -> list[float]:
        """Selection priors over legal actions; uniform unless overridden."""
        return [1.0 / len(legal)] * len(legal)


def validated_priors(
    provider: PolicyProvider,
    doc: Document,
    summary: str,
    legal: Sequence[AttributeKind],
) -> list[float]:
    """Provider priors when they form a probability vector, else uniform."""
    uniform = [1.0 / len(legal)] * len(legal)
    try:
        priors = list(provider.action_priors(doc, summary, legal))
    except Exception:
        return uniform
    if len(priors) != len(legal):
        return uniform
    if any((not isinstance(p, (int, float))) or p < 0 for p in priors):
        return uniform
    if not math.isclose(sum(priors), 1.0, abs_tol=1e-6):
        return uniform
    return [float(p) for p in priors]


def _history_path(history: History, action: AttributeKind | None = None) -> tuple:
    path = tuple(step.action.code for step in history if step.action is not None)
    if action is not None:
        path += (action.code,)
    return path


@dataclass
class DocScript:
    """Per-document lookup tables for the scripted policy.

    ``summaries`` maps action-code paths (root = empty tuple) to summary
    text. ``plans`` is consumed in call order, repeating the last entry.
    ``heuristics`` is a constant or a per-path map.
    """

    summaries: dict
    plans: list[str] = field(default_factory=list)
    implicit: str | None = None
    heuristics: object = None
    priors: list[float] | None = None

    def __post_init__(self):
        self.summaries = {tuple(k): v for k, v in self.summaries.items()}


class ScriptedPolicy(PolicyProvider):
    """Table-driven deterministic policy for fixtures and tests."""

    def __init__(self, scripts: Mapping[str, DocScript]):
        self.scripts = dict(scripts)
        self._plan_cursor: dict[str, int] = {}

    def _script(self, doc: Document) -> DocScript:
        try:
            return self.scripts[doc.id]
        except KeyError:
            raise PolicyFailure(f"no script for document {doc.id!r}") from None

    def _summary(self, doc: Document, path: tuple) -> str:
        script = self._script(doc)
        try:
            return script.summaries[path]
        except KeyError:
            raise PolicyFailure(
                f"no scripted summary for {doc.id!r} at path {path!r}"
            ) from None

    def generate_initial(self, doc, targets):
        return self._summary(doc, ())

    def adjust(self, doc, history, targets, action):
        return self._summary(doc, _history_path(history, action))

    def revise_with_implicit_plan(self, doc, history, targets):
        script = self._script(doc)
        if script.implicit is None:
            raise PolicyFailure(f"no scripted implicit revision for {doc.id!r}")
        return script.implicit

    def propose_plan(self, doc, history, targets, adaptive):
        script = self._script(doc)
        if not script.plans:
            raise PolicyFailure(f"no scripted plans for {doc.id!r}")
        cursor = self._plan_cursor.get(doc.id, 0)
        self._plan_cursor[doc.id] = cursor + 1
        return script.plans[min(cursor, len(script.plans) - 1)]

    def yes_probability(self, doc, summary, targets, path):
        heuristics = self._script(doc).heuristics
        if heuristics is None:
            raise HeuristicUnavailable("scripted policy has no heuristic table")
        if isinstance(heuristics, (int, float)):
            return float(heuristics)
        key = tuple(kind.code for kind in path)
        try:
            return float(heuristics[key])
        except KeyError:
            raise HeuristicUnavailable(f"no scripted heuristic at {key!r}") from None

    def action_priors(self, doc, summary, legal):
        script = self.scripts.get(doc.id)
        if script is not None and script.priors is not None:
            return list(script.priors)
        return super().action_priors(doc, summary, legal)


_FILLER_WORDS = ("overall", "broadly", "roughly", "certainly", "arguably")


class SurrogatePolicy(PolicyProvider):
    """Rule-based offline stand-in for a language model.

    Edits are deliberately interdependent (topic words and synthetic years
    are usually not document words, so they lower extractiveness; speaker
    prefixes add length) so the search has real trade-offs to explore.
    """

    def generate_initial(self, doc, targets):
        by_kind = {t.kind: t for t in targets}
        length = by_kind.get(AttributeKind.LENGTH)
        want = int(length.value) if length else 30
        words = [_FILLER_WORDS[0], _FILLER_WORDS[1]]
        words += self._document_pool(doc, want + 6)
        return " ".join(words[: want + 8])

    def adjust(self, doc, history, targets, action):
        words = tokenize(history[-1].summary)
        target = next(t for t in targets if t.kind is action)
        if action is AttributeKind.LENGTH:
            words = self._fit_length(doc, words, int(target.value))
        elif action is AttributeKind.EXTRACTIVENESS:
            words = self._fit_extractiveness(doc, words, float(target.value))
        elif action is AttributeKind.SPECIFICITY:
            words = self._fit_specificity(doc, words, float(target.value))
        elif action is AttributeKind.TOPIC:
            for word in target.value:
                lowered = word.lower()
                if lowered not in words:
                    words.append(lowered)
        else:
            prefix = str(target.value)
            if history[-1].summary.startswith(prefix):
                return history[-1].summary
            return f"{prefix} said: {history[-1].summary}"
        return " ".join(words)

    def revise_with_implicit_plan(self, doc, history, targets):
        by_kind = {t.kind: t for t in targets}
        words = tokenize(history[-1].summary)
        topic = by_kind.get(AttributeKind.TOPIC)
        if topic is not None:
            for word in topic.value:
                if word.lower() not in words:
                    words.append(word.lower())
        length = by_kind.get(AttributeKind.LENGTH)
        if length is not None:
            words = self._fit_length(doc, words, int(length.value))
        return " ".join(words)

    def propose_plan(self, doc, history, targets, adaptive):
        names = ", ".join(f"'{t.kind.value}'" for t in targets)
        return f"plan = [{names}]"

    def yes_probability(self, doc, summary, targets, path):
        key = doc.id + "|" + "/".join(kind.code for kind in path)
        digest = hashlib.blake2b(key.encode("utf-8"), digest_size=4).digest()
        fraction = int.from_bytes(digest, "big") / 0xFFFFFFFF
        return 0.3 + 0.6 * fraction

    def _document_pool(self, doc: Document, count: int) -> list[str]:
        pool = tokenize(doc.text) or ["empty"]
        return list(itertools.islice(itertools.cycle(pool), count))

    def _fit_length(self, doc: Document, words: list[str], want: int) -> list[str]:
        if len(words) > want:
            return words[:want]
        extra = self._document_pool(doc, want - len(words))
        return words + extra

    def _fit_extractiveness(
        self, doc: Document, words: list[str], percent: float
    ) -> list[str]:
        doc_tokens = set(tokenize(doc.text))
        want_hits = round(percent * len(words) / 100.0)
        hits = sum(1 for w in words if w in doc_tokens)
        out = list(words)
        if hits > want_hits:
            fillers = itertools.cycle(_FILLER_WORDS)
            for i, word in enumerate(out):
                if hits <= want_hits:
                    break
                if word in doc_tokens:
                    out[i] = next(fillers)
                    hits -= 1
        elif hits < want_hits:
            replacements = iter(self._document_pool(doc, len(out)))
            for i, word in enumerate(out):
                if hits >= want_hits:
                    break
                if word not in doc_tokens:
                    out[i] = next(replacements)
                    hits += 1
        return out

    def _fit_specificity(
        self, doc: Document, words: list[str], percent: float
    ) -> list[str]:
        want = round(percent * len(words) / 100.0)
        digit_positions = [i for i, w in enumerate(words) if any(c.isdigit() for c in w)]
        out = list(words)
        if len(digit_positions) > want:
            for i in digit_positions[want:][::-1]:
                del out[i]
        else:
            year = 2001
            for _ in range(want - len(digit_positions)):
                out.append(str(year))
                year += 1
        return out


@dataclass
class PolicyConfig:
    """HTTP policy settings; base URL and API key fall back to the
    PACO_LLM_BASE_URL / PACO_LLM_API_KEY environment variables."""

    model: str = "default"
    base_url: str | None = None
    api_key: str | None = None
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 0.5
    use_logprobs: bool = True
    top_logprobs: int = 20
    heuristic_samples: int = 5
    heuristic_temperature: float = 1.0
    prompt_dir: str | None = None


def split_messages(prompt: str) -> list[dict]:
    """Map a packaged prompt onto chat messages: the leading assistant-role
    sentence becomes the system message, the rest the user message."""
    parts = prompt.split("\n\n", 1)
    if len(parts) == 1:
        return [{"role": "user", "content": prompt}]
    return [
        {"role": "system", "content": parts[0]},
        {"role": "user", "content": parts[1]},
    ]


class HttpChatPolicy(PolicyProvider):
    """Chat-completions client with retries and logprob-based scoring."""

    def __init__(
        self,
        config: PolicyConfig | None = None,
        prompts: PolicyPrompts | None = None,
    ):
        self.config = config or PolicyConfig()
        base = self.config.base_url or os.environ.get("PACO_LLM_BASE_URL", "")
        if not base:
            raise PolicyFailure(
                "no chat endpoint; pass base_url or set PACO_LLM_BASE_URL"
            )
        self.base_url = base.rstrip("/")
        self.api_key = self.config.api_key or os.environ.get("PACO_LLM_API_KEY", "")
        self.prompts = prompts or PolicyPrompts(
            PromptLibrary(self.config.prompt_dir)
        )
        self._session = requests.Session()

    def _request(self, payload: dict) -> dict:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/v1/chat/completions"
        last_error = None
        for attempt in range(self.config.retries):
            try:
                response = self._session.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout
                )
            except requests.RequestException as err:
                last_error = err
                time.sleep(self.config.backoff * (2**attempt))
                continue
            if response.status_code >= 500:
                last_error = PolicyFailure(f"{url} returned {response.status_code}")
                time.sleep(self.config.backoff * (2**attempt))
                continue
            if response.status_code != 200:
                raise PolicyFailure(f"{url} returned {response.status_code}")
            try:
                return response.json()
            except ValueError as err:
                raise PolicyFailure(f"{url} returned invalid JSON") from err
        raise PolicyFailure(f"{url} failed after retries: {last_error}")

    def _complete(
        self,
        prompt: str,
        temperature: float | None = None,
        max_tokens: int | None = None,
        want_logprobs: bool = False,
    ) -> tuple[str, list | None]:
        payload = {
            "model": self.config.model,
            "messages": split_messages(prompt),
            "temperature": self.config.temperature
            if temperature is None
            else temperature,
            "max_tokens": self.config.max_tokens if max_tokens is None else max_tokens,
        }
        if want_logprobs:
            payload["logprobs"] = True
            payload["top_logprobs"] = self.config.top_logprobs
        data = self._request(payload)
        try:
            choice = data["choices"][0]
            text = choice["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as err:
            raise PolicyFailure(f"malformed completion response: {err}") from err
        logprobs = None
        if want_logprobs:
            logprobs = (choice.get("logprobs") or {}).get("content") or None
        return text, logprobs

    def _complete_summary(self, prompt: str) -> str:
        # a blank completion is retried once, then surfaced
        for attempt in range(2):
            text, _ = self._complete(prompt)
            text = text.strip()
            if text:
                return text
        raise EmptyCompletion("policy returned blank text")

    def generate_initial(self, doc, targets):
        return self._complete_summary(self.prompts.initial(doc, targets))

    def adjust(self, doc, history, targets, action):
        return self._complete_summary(
            self.prompts.adjust(doc, history, targets, action)
        )

    def revise_with_implicit_plan(self, doc, history, targets):
        return self._complete_summary(self.prompts.implicit(doc, history, targets))

    def propose_plan(self, doc, history, targets, adaptive):
        text, _ = self._complete(self.prompts.plan(doc, history, targets, adaptive))
        return text

    def yes_probability(self, doc, summary, targets, path):
        prompt = self.prompts.heuristic(doc, summary, targets, path)
        text, logprobs = self._complete(
            prompt, max_tokens=4, want_logprobs=self.config.use_logprobs
        )
        if logprobs:
            score = _yes_probability_from_logprobs(logprobs)
            if score is not None:
                return score
        return self._yes_probability_by_vote(prompt, text)

    def _yes_probability_by_vote(self, prompt: str, first_text: str) -> float:
        votes = [first_text]
        for _ in range(self.config.heuristic_samples - 1):
            text, _ = self._complete(
                prompt,
                temperature=self.config.heuristic_temperature,
                max_tokens=4,
            )
            votes.append(text)
        yes = no = 0
        for text in votes:
            verdict = _classify_answer(text)
            if verdict is True:
                yes += 1
            elif verdict is False:
                no += 1
        if yes + no == 0:
            return 0.5
        return yes / (yes + no)


def _classify_answer(text: str) -> bool | None:
    words = text.split()
    if not words:
        return None
    first = words[0].strip(".,:;!\"'").lower()
    if first.startswith("yes"):
        return True
    if first.startswith("no"):
        return False
    return None


def _yes_probability_from_logprobs(content: list) -> float | None:
    """p(Yes) / (p(Yes) + p(No)) over the first generated token's
    alternatives; None when neither token appears."""
    first = content[0] if content else None
    if not isinstance(first, dict):
        return None
    alternatives = first.get("top_logprobs") or [first]
    p_yes = p_no = 0.0
    for alt in alternatives:
        token = str(alt.get("token", "")).strip().lower()
        logprob = alt.get("logprob")
        if not token or not isinstance(logprob, (int, float)):
            continue
        if token.startswith("yes"):
            p_yes += math.exp(logprob)
        elif token.startswith("no"):
            p_no += math.exp(logprob)
    if p_yes + p_no == 0.0:
        return None
    return p_yes / (p_yes + p_no)
