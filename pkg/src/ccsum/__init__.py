"""Citance-contextualized summarization: parse papers, extract citances and
their contexts, retrieve the relevant passages from cited papers, and
generate short summaries tailored to the citing sentence.
"""

from .citances import (
    Citance,
    CitanceContext,
    KeywordQuery,
    build_context,
    citance_context,
    extract_citances,
    extract_keywords,
    neighbors_context,
    similar_context,
)
from .embedding import EmbeddingVector, ProviderConfig, cosine, embed_texts, embedding_fn
from .errors import CcsumError
from .evaluation import (
    EvalReport,
    QualityRating,
    RelevanceJudgment,
    aggregate_report,
    build_geval_prompt,
    ndcg_at_k,
    parse_geval_scores,
    rouge_l,
    rouge_n,
    weighted_kappa,
)
from .papers import (
    BibEntry,
    CitationSpan,
    CorpusStats,
    Paragraph,
    PaperDocument,
    Sentence,
    compute_corpus_stats,
    parse_document,
    segment_paragraph,
)
from .pipeline import ALL_SETUPS, DISTINGUISHED_SETUPS, Corpus, Setup, run_pipeline, run_task
from .retrieval import (
    IndexUnit,
    InvertedIndex,
    RankedList,
    RetrievalConfig,
    RetrievalResult,
    bm25_score,
    build_index,
    fuse_keyword_rankings,
    retrieve_for_citance,
    search,
)
from .summarize import (
    GenerationRequest,
    PromptTemplate,
    Summary,
    build_prompt,
    generate_summary,
    validate_summary,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_SETUPS",
    "BibEntry",
    "CcsumError",
    "Citance",
    "CitanceContext",
    "CitationSpan",
    "Corpus",
    "CorpusStats",
    "DISTINGUISHED_SETUPS",
    "EmbeddingVector",
    "EvalReport",
    "GenerationRequest",
    "IndexUnit",
    "InvertedIndex",
    "KeywordQuery",
    "PaperDocument",
    "Paragraph",
    "PromptTemplate",
    "ProviderConfig",
    "QualityRating",
    "RankedList",
    "RelevanceJudgment",
    "RetrievalConfig",
    "RetrievalResult",
    "Sentence",
    "Setup",
    "Summary",
    "aggregate_report",
    "bm25_score",
    "build_context",
    "build_geval_prompt",
    "build_index",
    "build_prompt",
    "citance_context",
    "compute_corpus_stats",
    "cosine",
    "embed_texts",
    "embedding_fn",
    "extract_citances",
    "extract_keywords",
    "fuse_keyword_rankings",
    "generate_summary",
    "ndcg_at_k",
    "neighbors_context",
    "parse_document",
    "parse_geval_scores",
    "retrieve_for_citance",
    "rouge_l",
    "rouge_n",
    "run_pipeline",
    "run_task",
    "search",
    "segment_paragraph",
    "similar_context",
    "validate_summary",
    "weighted_kappa",
]
