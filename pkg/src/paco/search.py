"""Summary-level Monte Carlo tree search.

Nodes are complete summaries. Each action asks the policy to rewrite the
latest summary so one attribute moves toward its target; the same attribute
may be adjusted again later. Selection follows PUCT with a visit-dependent
exploration coefficient, expansion is full-width over the requested
attributes, evaluation scores the measured control degree (optionally plus
a yes-probability heuristic), and the final decision picks the highest
degree anywhere in the tree, so the initial summary itself can win.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .attributes import AttributeKind, Document, measure_all
from .errors import DepthExceeded, PacoError, RootGenerationFailure
from .policy import HistoryStep, PolicyProvider, validated_priors
from .providers import MeasurementProviders
from .reward import RewardConfig, degree, node_value, satisfied


@dataclass
class SearchConfig:
    simulations: int = 8
    max_depth: int = 5
    c_base: float = 19652.0
    c_init: float = 1.25
    reward: RewardConfig = field(default_factory=RewardConfig)

    def __post_init__(self):
        if self.simulations < 1:
            raise ValueError("simulations must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.c_base <= 0:
            raise ValueError("c_base must be positive")


class SearchNode:
    """One summary in the tree; the incoming edge's statistics live here."""

    def __init__(
        self,
        node_id: int,
        parent: SearchNode | None,
        action: AttributeKind | None,
        prior: float,
    ):
        self.id = node_id
        self.parent = parent
        self.action = action
        self.depth = 0 if parent is None else parent.depth + 1
        self.prior = prior
        self.summary: str | None = None
        self.measured = None
        self.breakdown = None
        self.heuristic: float | None = None
        self.value: float | None = None
        self.terminal = False
        self.invalid = False
        self.expanded = False
        self.children: list[SearchNode] = []
        self.visits = 0
        self.total_value = 0.0

    @property
    def mean_value(self) -> float:
        if self.visits == 0:
            return 0.0
        return self.total_value / self.visits

    @property
    def scored(self) -> bool:
        """True once the node has a measured summary and degree."""
        return self.breakdown is not None

    def history(self) -> list[HistoryStep]:
        steps = []
        node: SearchNode | None = self
        while node is not None:
            steps.append(HistoryStep(node.action, node.summary))
            node = node.parent
        steps.reverse()
        return steps

    def path_actions(self) -> list[AttributeKind]:
        return [step.action for step in self.history() if step.action is not None]


def exploration_coeff(total_visits: int, cfg: SearchConfig) -> float:
    """Visit-dependent exploration constant; grows slowly with the total
    visit count so late simulations explore more."""
    return math.log((total_visits + cfg.c_base + 1) / cfg.c_base) + cfg.c_init


def puct_score(
    q: float, prior: float, total_visits: int, child_visits: int, c_puct: float
) -> float:
    return q + c_puct * prior * math.sqrt(total_visits) / (1 + child_visits)


def _best_child(node: SearchNode, cfg: SearchConfig) -> SearchNode | None:
    """Argmax-PUCT child, skipping failed ones; ties keep the first child
    in action-enumeration order. None when every child failed."""
    total = sum(child.visits for child in node.children)
    c_puct = exploration_coeff(total, cfg)
    best = None
    best_score = -math.inf
    for child in node.children:
        if child.invalid:
            continue
        score = puct_score(child.mean_value, child.prior, total, child.visits, c_puct)
        if score > best_score:
            best = child
            best_score = score
    return best


def select(root: SearchNode, cfg: SearchConfig) -> SearchNode:
    """Descend by argmax PUCT until a leaf, a terminal node, or the depth
    limit; stops early when every child of the current node failed."""
    node = root
    while node.expanded and not node.terminal and node.depth < cfg.max_depth:
        child = _best_child(node, cfg)
        if child is None:
            break
        node = child
    return node


def backpropagate(node: SearchNode, value: float) -> None:
    """Add one visit and the leaf value to every edge up to the root."""
    current: SearchNode | None = node
    while current is not None:
        current.visits += 1
        current.total_value += value
        current = current.parent


@dataclass
class SearchResult:
    doc: Document
    root: SearchNode
    best: SearchNode
    nodes: list[SearchNode]
    simulations_completed: int
    policy_calls: int
    config: SearchConfig

    @property
    def summary(self) -> str:
        return self.best.summary


def decide(nodes: list[SearchNode]) -> SearchNode:
    """Max-degree node over every scored node, the root included; ties go
    to the shallower node, then the earlier-created one."""
    best = None
    for node in nodes:
        if not node.scored:
            continue
        if best is None:
            best = node
        elif node.breakdown.degree > best.breakdown.degree or (
            node.breakdown.degree == best.breakdown.degree
            and node.depth < best.depth
        ):
            best = node
    if best is None:
        raise PacoError("no scored node to decide from")
    return best


class Search:
    """Single-document search state: one tree, sequential simulations."""

    def __init__(
        self,
        doc: Document,
        policy: PolicyProvider,
        providers: MeasurementProviders,
        config: SearchConfig | None = None,
    ):
        self.doc = doc
        self.policy = policy
        self.providers = providers
        self.config = config or SearchConfig()
        self.targets = tuple(doc.target_for(k) for k in doc.requested_kinds())
        self.legal = list(doc.requested_kinds())
        self.nodes: list[SearchNode] = []
        self.policy_calls = 0
        self.completed = 0

    def _new_node(
        self, parent: SearchNode | None, action: AttributeKind | None, prior: float
    ) -> SearchNode:
        node = SearchNode(len(self.nodes), parent, action, prior)
        self.nodes.append(node)
        return node

    def expand(self, node: SearchNode) -> list[SearchNode]:
        """Create one stub child per legal action; summaries stay pending
        until a stub is first visited."""
        if node.depth >= self.config.max_depth:
            raise DepthExceeded(f"node at depth {node.depth} must not expand")
        if node.terminal or node.expanded or not node.scored:
            raise PacoError("only scored, non-terminal leaves expand")
        priors = validated_priors(self.policy, self.doc, node.summary, self.legal)
        node.children = [
            self._new_node(node, action, prior)
            for action, prior in zip(self.legal, priors)
        ]
        node.expanded = True
        return node.children

    def evaluate(self, node: SearchNode) -> float:
        """Materialize the node's summary if needed, then measure, score,
        and set the terminal flag. Every result is cached on the node."""
        if node.summary is None:
            history = node.parent.history()
            node.summary = self.policy.adjust(
                self.doc, history, self.targets, node.action
            )
            self.policy_calls += 1
        node.measured = measure_all(node.summary, self.doc, self.providers)
        node.breakdown = degree(node.measured, self.targets, self.config.reward)
        heuristic = None
        if self.config.reward.uses_heuristic:
            heuristic = self.policy.yes_probability(
                self.doc, node.summary, self.targets, node.path_actions()
            )
            node.heuristic = heuristic
        node.value = node_value(
            node.breakdown.degree, heuristic, self.config.reward.value_mode
        )
        node.terminal = satisfied(node.measured, self.targets, self.config.reward)
        return node.value

    def _materialize(self, node: SearchNode) -> bool:
        try:
            self.evaluate(node)
        except PacoError:
            # keep the failed node so selection can route around it
            node.invalid = True
            node.value = -math.inf
            return False
        backpropagate(node, node.value)
        return True

    def _simulate(self, root: SearchNode) -> bool:
        node = select(root, self.config)
        if node.summary is None:
            return self._materialize(node)
        if node.terminal or node.depth >= self.config.max_depth:
            backpropagate(node, node.value)
            return True
        if not node.expanded:
            self.expand(node)
            child = _best_child(node, self.config)
            return self._materialize(child)
        # expanded but all children failed: re-register the node's own value
        if node is root:
            return False
        backpropagate(node, node.value)
        return True

    def run(self) -> SearchResult:
        root = self._new_node(None, None, 1.0)
        try:
            root.summary = self.policy.generate_initial(self.doc, self.targets)
            self.policy_calls += 1
            self.evaluate(root)
        except PacoError as err:
            raise RootGenerationFailure(
                f"could not build a scored initial summary: {err}"
            ) from err
        if not root.terminal:
            for _ in range(self.config.simulations):
                if self._simulate(root):
                    self.completed += 1
        best = decide(self.nodes)
        return SearchResult(
            doc=self.doc,
            root=root,
            best=best,
            nodes=self.nodes,
            simulations_completed=self.completed,
            policy_calls=self.policy_calls,
            config=self.config,
        )


def run_search(
    doc: Document,
    policy: PolicyProvider,
    providers: MeasurementProviders,
    config: SearchConfig | None = None,
) -> SearchResult:
    return Search(doc, policy, providers, config).run()


def search_trace(result: SearchResult) -> dict:
    """JSON-ready view of the whole tree with per-edge statistics."""
    nodes = []
    for node in result.nodes:
        nodes.append(
            {
                "id": node.id,
                "parent": None if node.parent is None else node.parent.id,
                "action": None if node.action is None else node.action.code,
                "depth": node.depth,
                "summary": node.summary,
                "measured": None
                if node.measured is None
                else {kind.value: value for kind, value in node.measured.items()},
                "degree": None if node.breakdown is None else node.breakdown.degree,
                "N": node.visits,
                "W": node.total_value,
                "Q": node.mean_value,
                "terminal": node.terminal,
            }
        )
    return {
        "nodes": nodes,
        "best_id": result.best.id,
        "simulations": result.simulations_completed,
        "policy_calls": result.policy_calls,
    }
