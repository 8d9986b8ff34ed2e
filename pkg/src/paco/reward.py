"""Control-degree reward: deviations, the local reward, value modes, and
the satisfaction predicate used for terminal detection.

The local reward is alpha / (avg_det + epsilon) + avg_nondet / beta, where
avg_det averages absolute deviations of deterministic attributes and
avg_nondet averages alignments of non-deterministic ones. It diverges at
exact deterministic match, so it is capped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .attributes import AttributeKind, AttributeTarget, AttributeVector
from .errors import HeuristicUnavailable, MissingAttribute

DEGREE_CAP = 1e9

DEFAULT_TOLERANCES = {
    AttributeKind.EXTRACTIVENESS: 2.0,
    AttributeKind.LENGTH: 2.0,
    AttributeKind.SPECIFICITY: 1.0,
}

VALUE_MODES = ("L", "H", "L+H")


@dataclass
class RewardConfig:
    alpha: float = 1.0
    beta: float = 10.0
    epsilon: float = 1e-9
    value_mode: str = "L"
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    nondet_floor: float = 0.75

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.value_mode not in VALUE_MODES:
            raise ValueError(f"value_mode must be one of {VALUE_MODES}")
        if any(v < 0 for v in self.tolerances.values()):
            raise ValueError("tolerances must be >= 0")

    @property
    def uses_heuristic(self) -> bool:
        return self.value_mode in ("H", "L+H")


@dataclass(frozen=True)
class DegreeBreakdown:
    """Per-attribute scores plus the aggregated control degree."""

    per_attribute: dict
    avg_det: float
    avg_nondet: float
    degree: float


def deviation(measured: AttributeVector, target: AttributeTarget) -> float:
    """Absolute deviation for deterministic kinds; the alignment itself for
    non-deterministic kinds."""
    if target.kind not in measured:
        raise MissingAttribute(target.kind.value)
    value = measured[target.kind]
    if target.kind.deterministic:
        return abs(float(value) - float(target.value))
    return float(value)


def degree(
    measured: AttributeVector,
    targets: Iterable[AttributeTarget],
    cfg: RewardConfig,
) -> DegreeBreakdown:
    """Control degree of a measured summary against its targets."""
    targets = list(targets)
    if not targets:
        raise MissingAttribute("no targets requested")
    per_attribute = {t.kind: deviation(measured, t) for t in targets}
    det = [v for k, v in per_attribute.items() if k.deterministic]
    nondet = [v for k, v in per_attribute.items() if not k.deterministic]
    avg_det = sum(det) / len(det) if det else 0.0
    avg_nondet = sum(nondet) / len(nondet) if nondet else 0.0
    if avg_det == 0.0 and cfg.alpha > 0:
        # the first term diverges at exact match; pin it to the cap so the
        # "perfect control" ordering is exact rather than epsilon-dependent
        raw = DEGREE_CAP
    else:
        raw = cfg.alpha / (avg_det + cfg.epsilon) + avg_nondet / cfg.beta
    return DegreeBreakdown(
        per_attribute=per_attribute,
        avg_det=avg_det,
        avg_nondet=avg_nondet,
        degree=min(raw, DEGREE_CAP),
    )


def node_value(local: float, heuristic: float | None, mode: str) -> float:
    """Backpropagated value: local degree, heuristic yes-probability, or
    their sum."""
    if mode not in VALUE_MODES:
        raise ValueError(f"value_mode must be one of {VALUE_MODES}")
    if mode == "L":
        return local
    if heuristic is None:
        raise HeuristicUnavailable(f"mode {mode} needs a heuristic score")
    if mode == "H":
        return heuristic
    return local + heuristic


def satisfied(
    measured: AttributeVector,
    targets: Iterable[AttributeTarget],
    cfg: RewardConfig,
) -> bool:
    """True iff every deterministic deviation is within tolerance and every
    non-deterministic alignment reaches the floor."""
    for target in targets:
        value = deviation(measured, target)
        if target.kind.deterministic:
            tolerance = cfg.tolerances.get(target.kind, 0.0)
            if value > tolerance:
                return False
        elif value < cfg.nondet_floor:
            return False
    return True
