"""Tree search: selection math, expansion, evaluation, backpropagation,
decision rule, and whole-search behavior against a brute-force oracle."""

from __future__ import annotations

import json
import math

import pytest

from oracle_tools import best_degree, enumerate_reachable, random_instance
from paco.attributes import AttributeKind, AttributeTarget, Document
from paco.errors import DepthExceeded, PacoError, RootGenerationFailure
from paco.policy import DocScript, ScriptedPolicy
from paco.providers import MeasurementProviders
from paco.reward import DegreeBreakdown, RewardConfig
from paco.search import (
    Search,
    SearchConfig,
    SearchNode,
    backpropagate,
    decide,
    exploration_coeff,
    puct_score,
    run_search,
    search_trace,
    select,
)

EXT = AttributeKind.EXTRACTIVENESS
LEN = AttributeKind.LENGTH
SPC = AttributeKind.SPECIFICITY


def _len_doc(target_length=55, doc_id="doc-1"):
    return Document(
        id=doc_id,
        text="alpha beta gamma delta epsilon zeta eta theta iota kappa",
        targets=(AttributeTarget(LEN, target_length),),
    )


def _words(n, base="w"):
    return " ".join(f"{base}{i}" for i in range(n))


class TestSearchConfig:
    def test_defaults(self):
        cfg = SearchConfig()
        assert cfg.simulations == 8
        assert cfg.max_depth == 5
        assert cfg.c_base == 19652.0
        assert cfg.c_init == 1.25

    @pytest.mark.parametrize(
        "kwargs",
        [{"simulations": 0}, {"max_depth": 0}, {"c_base": 0.0}, {"c_base": -1.0}],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SearchConfig(**kwargs)


class TestExplorationCoeff:
    def test_frozen_values(self):
        cfg = SearchConfig()
        assert exploration_coeff(0, cfg) == pytest.approx(1.2500509, abs=1e-6)
        assert exploration_coeff(16, cfg) == pytest.approx(1.2508648, abs=1e-6)
        # the same quantities to full precision
        assert exploration_coeff(0, cfg) == pytest.approx(
            math.log(19653 / 19652) + 1.25, abs=1e-15
        )
        assert exploration_coeff(16, cfg) == pytest.approx(
            math.log(19669 / 19652) + 1.25, abs=1e-15
        )

    def test_strictly_increasing(self):
        cfg = SearchConfig()
        values = [exploration_coeff(n, cfg) for n in (0, 1, 4, 16, 1000, 10**6)]
        assert all(a < b for a, b in zip(values, values[1:]))


class TestPuctScore:
    def test_zero_total_visits_scores_q(self):
        for q in (0.0, 0.3, -1.0):
            assert puct_score(q, 0.2, 0, 0, 1.25) == q

    def test_hand_case(self):
        assert puct_score(0.3, 0.2, 4, 1, 1.25) == pytest.approx(0.55, abs=1e-9)

    def test_less_visited_action_scores_higher(self):
        a1 = puct_score(0.4, 0.2, 10, 0, 1.25)
        a2 = puct_score(0.4, 0.2, 10, 3, 1.25)
        assert a1 > a2


def _bare_node(node_id=0, parent=None, action=None, prior=1.0):
    return SearchNode(node_id, parent, action, prior)


class TestSelect:
    def test_fresh_root_returns_root(self):
        root = _bare_node()
        root.summary = "s"
        assert select(root, SearchConfig()) is root

    def test_descends_dominant_q(self):
        root = _bare_node()
        root.summary = "s"
        root.expanded = True
        a = _bare_node(1, root, LEN, 0.5)
        b = _bare_node(2, root, EXT, 0.5)
        root.children = [a, b]
        a.summary, b.summary = "a", "b"
        a.visits, a.total_value = 3, 2.7  # Q = 0.9
        b.visits, b.total_value = 1, 0.1  # Q = 0.1
        assert select(root, SearchConfig()) is a

    def test_terminal_node_stops_descent(self):
        root = _bare_node()
        root.summary = "s"
        root.expanded = True
        root.terminal = True
        root.children = [_bare_node(1, root, LEN, 1.0)]
        assert select(root, SearchConfig()) is root

    def test_depth_limit_stops_descent(self):
        cfg = SearchConfig(max_depth=1)
        root = _bare_node()
        root.summary = "s"
        root.expanded = True
        child = _bare_node(1, root, LEN, 1.0)
        child.summary = "c"
        child.expanded = True
        child.children = [_bare_node(2, child, LEN, 1.0)]
        root.children = [child]
        assert select(root, cfg) is child

    def test_skips_invalid_children(self):
        root = _bare_node()
        root.summary = "s"
        root.expanded = True
        bad = _bare_node(1, root, EXT, 0.5)
        bad.invalid = True
        good = _bare_node(2, root, LEN, 0.5)
        root.children = [bad, good]
        assert select(root, SearchConfig()) is good

    def test_all_children_invalid_returns_node(self):
        root = _bare_node()
        root.summary = "s"
        root.expanded = True
        bad = _bare_node(1, root, EXT, 1.0)
        bad.invalid = True
        root.children = [bad]
        assert select(root, SearchConfig()) is root


class TestBackpropagate:
    def test_single_backprop(self):
        root = _bare_node()
        child = _bare_node(1, root, LEN, 1.0)
        backpropagate(child, 0.5)
        assert child.visits == 1
        assert child.total_value == 0.5
        assert child.mean_value == 0.5
        assert root.visits == 1

    def test_two_backprops_average(self):
        root = _bare_node()
        child = _bare_node(1, root, LEN, 1.0)
        backpropagate(child, 0.5)
        backpropagate(child, 0.3)
        assert child.visits == 2
        assert child.total_value == pytest.approx(0.8)
        assert child.mean_value == pytest.approx(0.4)

    def test_siblings_untouched(self):
        root = _bare_node()
        a = _bare_node(1, root, LEN, 0.5)
        b = _bare_node(2, root, EXT, 0.5)
        root.children = [a, b]
        backpropagate(a, 0.7)
        assert b.visits == 0 and b.total_value == 0.0


def _search_with_root(doc, script, config=None):
    policy = ScriptedPolicy({doc.id: script})
    search = Search(doc, policy, MeasurementProviders.fallback(), config)
    root = search._new_node(None, None, 1.0)
    root.summary = script.summaries[()]
    search.evaluate(root)
    return search, root


class TestExpand:
    def test_full_width_stubs(self):
        doc = Document(
            id="doc-1",
            text="alpha beta gamma",
            targets=(
                AttributeTarget(EXT, 50.0),
                AttributeTarget(LEN, 5),
                AttributeTarget(SPC, 10.0),
            ),
        )
        search, root = _search_with_root(doc, DocScript(summaries={(): "alpha beta"}))
        children = search.expand(root)
        assert [c.action for c in children] == [EXT, LEN, SPC]
        assert all(c.summary is None for c in children)
        assert all(c.depth == 1 for c in children)
        assert [c.prior for c in children] == pytest.approx([1 / 3] * 3)
        assert root.expanded

    def test_revisiting_actions_allowed(self):
        doc = _len_doc()
        script = DocScript(summaries={(): _words(40), ("len",): _words(50)})
        search, root = _search_with_root(doc, script)
        search.expand(root)
        child = root.children[0]
        search.evaluate(child)
        grandchildren = search.expand(child)
        assert [g.action for g in grandchildren] == [LEN]

    def test_depth_limit_raises(self):
        doc = _len_doc()
        script = DocScript(summaries={(): _words(40), ("len",): _words(50)})
        search, root = _search_with_root(doc, script, SearchConfig(max_depth=1))
        search.expand(root)
        child = root.children[0]
        search.evaluate(child)
        with pytest.raises(DepthExceeded):
            search.expand(child)

    def test_unscored_or_terminal_nodes_never_expand(self):
        doc = _len_doc()
        script = DocScript(summaries={(): _words(40), ("len",): _words(55)})
        search, root = _search_with_root(doc, script)
        search.expand(root)
        stub = root.children[0]
        with pytest.raises(PacoError):
            search.expand(stub)
        search.evaluate(stub)
        assert stub.terminal  # 55 words on a 55-word target
        with pytest.raises(PacoError):
            search.expand(stub)


class TestEvaluate:
    def test_child_value_is_hand_degree(self):
        doc = _len_doc(target_length=55)
        script = DocScript(summaries={(): _words(40), ("len",): _words(50)})
        search, root = _search_with_root(doc, script)
        search.expand(root)
        value = search.evaluate(root.children[0])
        assert value == pytest.approx(1.0 / (5.0 + 1e-9), rel=1e-12)
        assert root.children[0].breakdown.degree == value

    def test_heuristic_mode_adds_yes_probability(self):
        doc = _len_doc(target_length=55)
        script = DocScript(
            summaries={(): _words(40), ("len",): _words(50)},
            heuristics=0.7,
        )
        config = SearchConfig(reward=RewardConfig(value_mode="L+H"))
        search, root = _search_with_root(doc, script, config)
        search.expand(root)
        child = root.children[0]
        value = search.evaluate(child)
        assert value == pytest.approx(1.0 / (5.0 + 1e-9) + 0.7, rel=1e-12)
        assert child.heuristic == 0.7

    def test_satisfying_child_flagged_terminal_with_capped_degree(self):
        doc = _len_doc(target_length=55)
        script = DocScript(summaries={(): _words(40), ("len",): _words(55)})
        search, root = _search_with_root(doc, script)
        search.expand(root)
        child = root.children[0]
        search.evaluate(child)
        assert child.terminal
        assert child.breakdown.degree == 1e9

    def test_summary_generated_once(self):
        doc = _len_doc()
        script = DocScript(summaries={(): _words(40), ("len",): _words(50)})
        search, root = _search_with_root(doc, script)
        search.expand(root)
        child = root.children[0]
        search.evaluate(child)
        calls_after_first = search.policy_calls
        search.evaluate(child)  # re-evaluation reuses the cached summary
        assert search.policy_calls == calls_after_first


class TestDecide:
    def _node(self, node_id, depth, deg, parent=None):
        node = _bare_node(node_id, parent)
        node.depth = depth
        node.summary = f"s{node_id}"
        node.breakdown = DegreeBreakdown(
            per_attribute={}, avg_det=1.0, avg_nondet=0.0, degree=deg
        )
        return node

    def test_only_root(self):
        root = self._node(0, 0, 0.28)
        assert decide([root]) is root

    def test_child_beats_root(self):
        root = self._node(0, 0, 0.28)
        child = self._node(1, 1, 0.31)
        assert decide([root, child]) is child

    def test_root_can_win(self):
        root = self._node(0, 0, 0.28)
        child = self._node(1, 1, 0.10)
        assert decide([root, child]) is root

    def test_tie_prefers_shallower(self):
        root = self._node(0, 0, 0.1)
        deep = self._node(1, 3, 0.31)
        shallow = self._node(2, 1, 0.31)
        assert decide([root, deep, shallow]) is shallow

    def test_tie_same_depth_prefers_earlier_creation(self):
        root = self._node(0, 0, 0.1)
        first = self._node(1, 2, 0.31)
        second = self._node(2, 2, 0.31)
        assert decide([root, first, second]) is first

    def test_unscored_nodes_ignored(self):
        root = self._node(0, 0, 0.2)
        stub = _bare_node(1, root)
        assert decide([root, stub]) is root

    def test_no_scored_nodes_raises(self):
        with pytest.raises(PacoError):
            decide([_bare_node()])


class TestRunSearch:
    def test_satisfied_root_short_circuits(self):
        doc = _len_doc(target_length=40)
        script = DocScript(summaries={(): _words(40)})
        policy = ScriptedPolicy({doc.id: script})
        result = run_search(doc, policy, MeasurementProviders.fallback())
        assert result.best is result.root
        assert result.simulations_completed == 0
        assert result.policy_calls == 1
        assert len(result.nodes) == 1
        assert result.root.terminal

    def test_two_action_fixture_matches_enumeration(self):
        text = "alpha beta gamma delta epsilon zeta eta theta iota kappa"
        doc = Document(
            id="doc-1",
            text=text,
            targets=(AttributeTarget(LEN, 10), AttributeTarget(SPC, 40.0)),
        )
        script = DocScript(
            summaries={
                (): "alpha beta gamma delta",
                ("len",): "alpha beta gamma delta epsilon zeta eta 2001",
                ("spc",): "alpha beta 2001 2002 gamma",
                ("len", "len"): (
                    "alpha beta gamma delta epsilon zeta eta theta iota"
                ),
                ("len", "spc"): "alpha beta gamma 2001 2002 delta epsilon zeta",
                ("spc", "len"): (
                    "alpha beta 2001 2002 2003 2004 gamma delta epsilon zeta"
                ),
                ("spc", "spc"): "alpha 2001 2002",
            }
        )
        policy = ScriptedPolicy({doc.id: script})
        providers = MeasurementProviders.fallback()
        config = SearchConfig(simulations=64, max_depth=2)
        result = run_search(doc, policy, providers, config)
        entries = enumerate_reachable(doc, policy, providers, config)
        assert len(entries) <= 7
        assert result.best.breakdown.degree == best_degree(entries)
        # ten words, four entity tokens: both deviations vanish
        assert result.best.summary == (
            "alpha beta 2001 2002 2003 2004 gamma delta epsilon zeta"
        )
        assert result.best.terminal
        assert result.best.breakdown.degree == 1e9

    def test_policy_call_budget(self):
        doc, policy, providers, _ = random_instance(3)
        config = SearchConfig(simulations=8, max_depth=3)
        result = run_search(doc, policy, providers, config)
        assert result.policy_calls <= 1 + config.simulations
        assert result.policy_calls == sum(
            1 for node in result.nodes if node.summary is not None
        )

    def test_root_generation_failure(self):
        doc = _len_doc()
        policy = ScriptedPolicy({})
        with pytest.raises(RootGenerationFailure):
            run_search(doc, policy, MeasurementProviders.fallback())

    def test_failed_adjustment_is_isolated(self):
        doc = Document(
            id="doc-1",
            text="alpha beta gamma delta epsilon",
            targets=(AttributeTarget(LEN, 30), AttributeTarget(SPC, 40.0)),
        )
        # the length branch is missing on purpose; it fails on first visit
        script = DocScript(
            summaries={
                (): "alpha beta gamma",
                ("spc",): "alpha beta 2001",
                ("spc", "len"): "alpha beta gamma 2001",
                ("spc", "spc"): "alpha 2001 2002",
            }
        )
        policy = ScriptedPolicy({doc.id: script})
        config = SearchConfig(simulations=4, max_depth=2)
        result = run_search(doc, policy, MeasurementProviders.fallback(), config)
        failed = [n for n in result.nodes if n.invalid]
        assert len(failed) == 1
        assert failed[0].action is LEN
        assert failed[0].summary is None
        assert failed[0].visits == 0
        # the failed simulation is not counted as completed
        assert result.simulations_completed == config.simulations - 1
        assert sum(c.visits for c in result.root.children) == (
            result.simulations_completed
        )
        assert result.best.breakdown is not None
        assert not result.best.invalid

    def test_trace_shape(self):
        doc, policy, providers, config = random_instance(11)
        result = run_search(doc, policy, providers, config)
        trace = search_trace(result)
        assert set(trace) == {"nodes", "best_id", "simulations", "policy_calls"}
        assert trace["best_id"] == result.best.id
        assert trace["simulations"] == result.simulations_completed
        node_fields = {
            "id",
            "parent",
            "action",
            "depth",
            "summary",
            "measured",
            "degree",
            "N",
            "W",
            "Q",
            "terminal",
        }
        for entry in trace["nodes"]:
            assert set(entry) == node_fields
        root_entry = trace["nodes"][0]
        assert root_entry["parent"] is None
        assert root_entry["action"] is None
        for entry in trace["nodes"][1:]:
            assert entry["action"] in {"ext", "len", "spc", "top", "spk"}
        scored = [e for e in trace["nodes"] if e["measured"] is not None]
        for entry in scored:
            assert set(entry["measured"]) <= {
                "extractiveness",
                "length",
                "specificity",
                "topic",
                "speaker",
            }
        json.dumps(trace)  # JSON-serializable end to end


class TestSearchProperties:
    def test_oracle_equivalence_frozen_seed_range(self):
        for seed in range(100):
            doc, policy, providers, config = random_instance(seed)
            result = run_search(doc, policy, providers, config)
            entries = enumerate_reachable(doc, policy, providers, config)
            assert result.best.breakdown.degree == best_degree(entries), seed

    def test_statistics_conservation_thousand_trials(self):
        for seed in range(1000):
            doc, policy, providers, config = random_instance(seed)
            result = run_search(doc, policy, providers, config)
            root = result.root
            assert sum(c.visits for c in root.children) == (
                result.simulations_completed
            ), seed
            for node in result.nodes:
                assert abs(node.total_value - node.mean_value * node.visits) <= 1e-9
                assert node.visits >= 0
                assert node.depth <= config.max_depth
                if node.parent is not None:
                    assert node.depth == node.parent.depth + 1
                    assert node.action in doc.requested_kinds()

    def test_decision_dominance(self):
        for seed in range(200):
            doc, policy, providers, config = random_instance(seed)
            result = run_search(doc, policy, providers, config)
            assert (
                result.best.breakdown.degree >= result.root.breakdown.degree
            ), seed

    def test_determinism(self):
        for seed in range(25):
            first = run_search(*random_instance(seed))
            second = run_search(*random_instance(seed))
            a = json.dumps(search_trace(first), sort_keys=True)
            b = json.dumps(search_trace(second), sort_keys=True)
            assert a == b, seed
