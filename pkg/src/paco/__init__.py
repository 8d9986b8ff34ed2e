"""Training-free MCTS planner for multi-attribute controllable summarization."""

from .attributes import (
    AttributeKind,
    AttributeTarget,
    AttributeVector,
    Document,
    Utterance,
    kind_from_name,
    measure_all,
    tokenize,
)
from .baselines import (
    BaselineResult,
    explicit_plan,
    implicit_plan,
    parse_plan,
    single_pass,
)
from .harness import (
    CorpusRecord,
    RunReport,
    evaluate_corpus,
    load_corpus,
    rouge1_f,
    serialize_corpus,
)
from .policy import (
    HistoryStep,
    HttpChatPolicy,
    PolicyConfig,
    PolicyProvider,
    ScriptedPolicy,
    SurrogatePolicy,
)
from .providers import (
    EntitySpan,
    HashingEmbedder,
    HeuristicNer,
    HttpEmbeddingProvider,
    HttpNerProvider,
    MeasurementProviders,
)
from .report import write_report
from .reward import DegreeBreakdown, RewardConfig, degree, node_value, satisfied
from .search import (
    SearchConfig,
    SearchResult,
    exploration_coeff,
    puct_score,
    run_search,
    search_trace,
)

__all__ = [
    "AttributeKind",
    "AttributeTarget",
    "AttributeVector",
    "BaselineResult",
    "CorpusRecord",
    "DegreeBreakdown",
    "Document",
    "EntitySpan",
    "HashingEmbedder",
    "HeuristicNer",
    "HistoryStep",
    "HttpChatPolicy",
    "HttpEmbeddingProvider",
    "HttpNerProvider",
    "MeasurementProviders",
    "PolicyConfig",
    "PolicyProvider",
    "RewardConfig",
    "RunReport",
    "ScriptedPolicy",
    "SearchConfig",
    "SearchResult",
    "SurrogatePolicy",
    "Utterance",
    "degree",
    "evaluate_corpus",
    "explicit_plan",
    "exploration_coeff",
    "implicit_plan",
    "kind_from_name",
    "load_corpus",
    "measure_all",
    "node_value",
    "parse_plan",
    "puct_score",
    "rouge1_f",
    "run_search",
    "satisfied",
    "search_trace",
    "serialize_corpus",
    "single_pass",
    "tokenize",
    "write_report",
]

__version__ = "0.1.0"
