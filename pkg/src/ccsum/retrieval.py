"""Sentence- and paragraph-level indexing and ranked retrieval over cited
papers.

Scoring is either BM25 over an inverted index or cosine over embeddings
(exhaustive across the target paper's units; no approximate structures).
Keyword runs are merged by weighted fusion of per-keyword rankings. All
orderings are total: score descending, then unit_id ascending.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .citances import Citance, CitanceContext, EmbedFn, KeywordQuery
from .embedding import cosine
from .errors import (
    DuplicateUnitId,
    LengthMismatch,
    MalformedInput,
    TargetUnavailable,
    UnknownUnit,
    ZeroVector,
)
from .papers import PaperDocument
from .text import TOKENIZER_VERSION, tokenize

SENTENCE = "sentence"
PARAGRAPH = "paragraph"
GRANULARITIES = (SENTENCE, PARAGRAPH)

INDEX_FORMAT = "inverted-index-v1"

DEFAULT_K1 = 1.0
DEFAULT_B = 0.75
TOP_K_SENTENCES = 5
TOP_K_PARAGRAPHS = 2


def normalize_granularity(value: str) -> str:
    """Accept both the singular internal names and the plural CLI spellings."""
    mapping = {
        "sentence": SENTENCE,
        "sentences": SENTENCE,
        "paragraph": PARAGRAPH,
        "paragraphs": PARAGRAPH,
    }
    if value not in mapping:
        raise MalformedInput(f"unknown granularity: {value!r}")
    return mapping[value]


@dataclass(frozen=True)
class IndexUnit:
    unit_id: str
    paper_id: str
    granularity: str
    text: str
    token_count: int


@dataclass(frozen=True)
class RetrievalConfig:
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    top_k_sentences: int = TOP_K_SENTENCES
    top_k_paragraphs: int = TOP_K_PARAGRAPHS
    model: str = "bm25"
    context_kind: str = "citance"
    use_keywords: bool = False

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise MalformedInput("k1 must be >= 0")
        if not (0.0 <= self.b <= 1.0):
            raise MalformedInput("b must be in [0, 1]")
        if self.top_k_sentences < 1 or self.top_k_paragraphs < 1:
            raise MalformedInput("top-k values must be >= 1")
        if self.model not in ("bm25", "dense"):
            raise MalformedInput(f"unknown retrieval model: {self.model!r}")
        if self.context_kind not in ("citance", "neighbors", "similar"):
            raise MalformedInput(f"unknown context kind: {self.context_kind!r}")

    def top_k(self, granularity: str) -> int:
        return self.top_k_sentences if granularity == SENTENCE else self.top_k_paragraphs


@dataclass(frozen=True)
class RankedList:
    hits: tuple[tuple[str, float], ...]
    query_descriptor: str

    def truncated(self, k: int) -> "RankedList":
        return RankedList(hits=self.hits[:k], query_descriptor=self.query_descriptor)


@dataclass(frozen=True)
class RetrievalResult:
    citance_id: str
    target_paper_id: str
    config: RetrievalConfig
    granularity: str
    hits: RankedList
    retrieved_texts: tuple[str, ...]


class InvertedIndex:
    """Immutable after build; safe for unbounded concurrent readers."""

    def __init__(
        self,
        granularity: str,
        postings: dict[str, list[tuple[str, int]]],
        unit_lengths: dict[str, int],
        unit_texts: dict[str, str],
        unit_papers: dict[str, str],
    ) -> None:
        self.granularity = granularity
        self.postings = postings
        self.unit_lengths = unit_lengths
        self.unit_texts = unit_texts
        self.unit_papers = unit_papers
        self.doc_count = len(unit_lengths)
        self.avg_unit_length = (
            sum(unit_lengths.values()) / self.doc_count if self.doc_count else 0.0
        )
        self.tokenizer_version = TOKENIZER_VERSION
        # term -> unit -> tf, for O(1) lookups during scoring
        self._tf: dict[str, dict[str, int]] = {
            term: dict(rows) for term, rows in postings.items()
        }

    def term_frequency(self, term: str, unit_id: str) -> int:
        return self._tf.get(term, {}).get(unit_id, 0)

    def document_frequency(self, term: str) -> int:
        return len(self.postings.get(term, ()))


def units_for_document(doc: PaperDocument, granularity: str) -> list[IndexUnit]:
    """Abstract and body units of one paper; the title is not indexed."""
    granularity = normalize_granularity(granularity)
    units: list[IndexUnit] = []
    for para in doc.iter_paragraphs():
        if granularity == PARAGRAPH:
            units.append(
                IndexUnit(
                    unit_id=f"{doc.paper_id}:{para.para_id}",
                    paper_id=doc.paper_id,
                    granularity=PARAGRAPH,
                    text=para.text,
                    token_count=len(tokenize(para.text)),
                )
            )
        else:
            for sent in para.sentences:
                units.append(
                    IndexUnit(
                        unit_id=f"{doc.paper_id}:{para.para_id}:{sent.sent_index}",
                        paper_id=doc.paper_id,
                        granularity=SENTENCE,
                        text=sent.text,
                        token_count=len(tokenize(sent.text)),
                    )
                )
    return units


def build_index(units: Iterable[IndexUnit], granularity: str) -> InvertedIndex:
    granularity = normalize_granularity(granularity)
    postings: dict[str, dict[str, int]] = {}
    unit_lengths: dict[str, int] = {}
    unit_texts: dict[str, str] = {}
    unit_papers: dict[str, str] = {}
    for unit in units:
        if unit.granularity != granularity:
            raise MalformedInput(
                f"unit {unit.unit_id} has granularity {unit.granularity}, index wants {granularity}"
            )
        if unit.unit_id in unit_lengths:
            raise DuplicateUnitId(f"duplicate unit_id: {unit.unit_id}")
        tokens = tokenize(unit.text)
        if unit.token_count != len(tokens):
            raise MalformedInput(
                f"unit {unit.unit_id}: token_count {unit.token_count} != {len(tokens)}"
            )
        unit_lengths[unit.unit_id] = len(tokens)
        unit_texts[unit.unit_id] = unit.text
        unit_papers[unit.unit_id] = unit.paper_id
        for tok in tokens:
            postings.setdefault(tok, {}).setdefault(unit.unit_id, 0)
            postings[tok][unit.unit_id] += 1
    ordered = {
        term: sorted(rows.items()) for term, rows in sorted(postings.items())
    }
    return InvertedIndex(granularity, ordered, unit_lengths, unit_texts, unit_papers)


def bm25_score(
    query_terms: Sequence[str],
    unit_id: str,
    index: InvertedIndex,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> float:
    """Okapi-style score with the non-negative idf ln(1 + (N-n+0.5)/(n+0.5)).

    query_terms is a multiset: repeated terms contribute once per occurrence.
    """
    if unit_id not in index.unit_lengths:
        raise UnknownUnit(f"unit not in index: {unit_id}")
    n_units = index.doc_count
    length = index.unit_lengths[unit_id]
    avgdl = index.avg_unit_length
    score = 0.0
    for term in query_terms:
        tf = index.term_frequency(term, unit_id)
        if tf == 0:
            continue
        df = index.document_frequency(term)
        idf = math.log(1.0 + (n_units - df + 0.5) / (df + 0.5))
        score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * length / avgdl))
    return score


def search(
    index: InvertedIndex,
    query_text: str,
    model: str,
    embed: EmbedFn | None = None,
    k: int = TOP_K_SENTENCES,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> RankedList:
    """Top-k units for a free-text query under the given model.

    bm25 scores only units sharing at least one query term; dense scores
    every unit with a non-zero embedding. Order: score desc, unit_id asc.
    """
    if k < 1:
        raise MalformedInput("k must be >= 1")
    descriptor = f"{model}|{query_text}"
    if model == "bm25":
        terms = tokenize(query_text)
        candidates = sorted(
            {uid for term in terms for uid, _ in index.postings.get(term, ())}
        )
        scored = [(uid, bm25_score(terms, uid, index, k1=k1, b=b)) for uid in candidates]
    elif model == "dense":
        if embed is None:
            raise MalformedInput("dense search requires an embedding function")
        unit_ids = sorted(index.unit_texts)
        if not unit_ids:
            return RankedList(hits=(), query_descriptor=descriptor)
        vectors = embed([query_text] + [index.unit_texts[uid] for uid in unit_ids])
        query_vec = vectors[0]
        if query_vec.is_zero():
            return RankedList(hits=(), query_descriptor=descriptor)
        scored = []
        for uid, vec in zip(unit_ids, vectors[1:]):
            try:
                scored.append((uid, cosine(query_vec, vec)))
            except ZeroVector:
                continue
    else:
        raise MalformedInput(f"unknown retrieval model: {model!r}")
    scored.sort(key=lambda t: (-t[1], t[0]))
    return RankedList(hits=tuple(scored[:k]), query_descriptor=descriptor)


def _normalize_scores(hits: Sequence[tuple[str, float]]) -> dict[str, float]:
    """Map scores into [0, 1] with the lower bound anchored at zero.

    The anchor keeps score mass meaningful: a ranking whose minimum score is
    positive should not have its floor squashed to 0. Negative scores (dense
    cosine) stretch the range downward instead. Constant rankings map to 1.
    """
    if not hits:
        return {}
    values = [s for _, s in hits]
    lo = min(0.0, min(values))
    hi = max(values)
    if hi == lo:
        return {uid: 1.0 for uid, _ in hits}
    return {uid: (s - lo) / (hi - lo) for uid, s in hits}


def fuse_keyword_rankings(
    rankings: Sequence[RankedList], weights: Sequence[float]
) -> RankedList:
    """Weighted sum of per-ranking normalized scores; negative weights clamp to 0."""
    if len(rankings) != len(weights) or not rankings:
        raise LengthMismatch(
            f"{len(rankings)} rankings vs {len(weights)} weights (need equal, >= 1)"
        )
    fused: dict[str, float] = {}
    for ranking, weight in zip(rankings, weights):
        w = max(0.0, weight)
        for uid, norm in _normalize_scores(ranking.hits).items():
            fused[uid] = fused.get(uid, 0.0) + w * norm
    hits = sorted(fused.items(), key=lambda t: (-t[1], t[0]))
    descriptor = f"fused|{len(rankings)} rankings"
    return RankedList(hits=tuple(hits), query_descriptor=descriptor)


def retrieve_for_citance(
    c: Citance,
    ctx: CitanceContext,
    keywords: Sequence[KeywordQuery] | None,
    target: PaperDocument | None,
    cfg: RetrievalConfig,
    embed: EmbedFn | None = None,
    granularity: str = SENTENCE,
) -> RetrievalResult:
    """Top-k units of the cited paper for one citance context.

    With cfg.use_keywords, each keyword runs as its own query and the
    rankings fuse under the keyword weights; an empty keyword list, or
    keywords that match nothing in the cited paper, fall back to the
    plain context query so the setup still yields a result.
    """
    granularity = normalize_granularity(granularity)
    if target is None or not target.has_body:
        raise TargetUnavailable(
            f"cited paper for citance {c.citance_id} has no ingested full text"
        )
    units = units_for_document(target, granularity)
    if not units:
        raise TargetUnavailable(
            f"cited paper {target.paper_id} has no indexable {granularity} units"
        )
    index = build_index(units, granularity)
    top_k = cfg.top_k(granularity)
    ranked = None
    if cfg.use_keywords and keywords:
        rankings = [
            search(index, kw.phrase, cfg.model, embed=embed, k=len(units), k1=cfg.k1, b=cfg.b)
            for kw in keywords
        ]
        ranked = fuse_keyword_rankings(rankings, [kw.weight for kw in keywords]).truncated(top_k)
    if ranked is None or not ranked.hits:
        ranked = search(
            index, ctx.text, cfg.model, embed=embed, k=top_k, k1=cfg.k1, b=cfg.b
        )
    return RetrievalResult(
        citance_id=c.citance_id,
        target_paper_id=target.paper_id,
        config=cfg,
        granularity=granularity,
        hits=ranked,
        retrieved_texts=tuple(index.unit_texts[uid] for uid, _ in ranked.hits),
    )


def save_index(index: InvertedIndex, path: str | Path) -> None:
    """Versioned JSON persistence with a self-describing header."""
    payload = {
        "format": INDEX_FORMAT,
        "tokenizer_version": index.tokenizer_version,
        "granularity": index.granularity,
        "doc_count": index.doc_count,
        "avg_unit_length": index.avg_unit_length,
        "units": {
            uid: {
                "length": index.unit_lengths[uid],
                "text": index.unit_texts[uid],
                "paper_id": index.unit_papers[uid],
            }
            for uid in sorted(index.unit_lengths)
        },
        "postings": {term: list(map(list, rows)) for term, rows in index.postings.items()},
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=None), "utf-8"
    )


def load_index(path: str | Path) -> InvertedIndex:
    try:
        payload = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"index file is not valid JSON: {exc}") from exc
    if payload.get("format") != INDEX_FORMAT:
        raise MalformedInput(f"unsupported index format: {payload.get('format')!r}")
    if payload.get("tokenizer_version") != TOKENIZER_VERSION:
        raise MalformedInput(
            f"index built with tokenizer {payload.get('tokenizer_version')!r}, "
            f"current is {TOKENIZER_VERSION!r}"
        )
    units = payload["units"]
    return InvertedIndex(
        granularity=normalize_granularity(payload["granularity"]),
        postings={
            term: [(uid, tf) for uid, tf in rows] for term, rows in payload["postings"].items()
        },
        unit_lengths={uid: meta["length"] for uid, meta in units.items()},
        unit_texts={uid: meta["text"] for uid, meta in units.items()},
        unit_papers={uid: meta["paper_id"] for uid, meta in units.items()},
    )
