"""Budgeted multi-round log annotation and LLM-driven template generation."""

from .confidence import (
    ConfidenceReport,
    Prediction,
    avg_word_probability,
    confidence_score,
    consistency_indicator,
)
from .corpus import Corpus, EvalReport, OracleAnnotator, evaluate, ingest, oracle_annotate
from .demonstration import DemoSet, covered_words, select_demos, select_demos_topk
from .embedding import HashEmbedder, RemoteEmbedder, SimilarityContext, cosine, words_similar
from .gateway import (
    FaultProfile,
    GatewayConfig,
    MockGateway,
    PromptBundle,
    RemoteGateway,
    build_prompt,
    parse_response,
)
from .model import (
    DEFAULT_TYPES,
    LogRecord,
    Template,
    TemplateToken,
    TokenKind,
    TypeCatalog,
    parse_template,
    template_matches,
    tokenize_log,
)
from .selection import (
    RoundState,
    RunConfig,
    RunResult,
    RunState,
    adaptive_budget,
    build_context,
    diversity_init,
    greedy_select,
    marginal_gain,
    objective_value,
    run_annotation_loop,
    select_round,
)
from .similarity import (
    BipartiteIndex,
    RepresentativeSet,
    ResidualLog,
    build_bipartite,
    identified_words,
    representative_set,
    residual,
    sed,
    word_cost,
)

__version__ = "0.1.0"

__all__ = [
    "ConfidenceReport",
    "Prediction",
    "avg_word_probability",
    "confidence_score",
    "consistency_indicator",
    "Corpus",
    "EvalReport",
    "OracleAnnotator",
    "evaluate",
    "ingest",
    "oracle_annotate",
    "DemoSet",
    "covered_words",
    "select_demos",
    "select_demos_topk",
    "HashEmbedder",
    "RemoteEmbedder",
    "SimilarityContext",
    "cosine",
    "words_similar",
    "FaultProfile",
    "GatewayConfig",
    "MockGateway",
    "PromptBundle",
    "RemoteGateway",
    "build_prompt",
    "parse_response",
    "DEFAULT_TYPES",
    "LogRecord",
    "Template",
    "TemplateToken",
    "TokenKind",
    "TypeCatalog",
    "parse_template",
    "template_matches",
    "tokenize_log",
    "RoundState",
    "RunConfig",
    "RunResult",
    "RunState",
    "adaptive_budget",
    "build_context",
    "diversity_init",
    "greedy_select",
    "marginal_gain",
    "objective_value",
    "run_annotation_loop",
    "select_round",
    "BipartiteIndex",
    "RepresentativeSet",
    "ResidualLog",
    "build_bipartite",
    "identified_words",
    "representative_set",
    "residual",
    "sed",
    "word_cost",
]
