"""Citance extraction and the three query contexts built around a citance.

A citance is a sentence containing at least one citation span. Its contexts:
the citance alone, the citance plus its immediate paragraph neighbors, or
the citance plus the two paragraph-mates most similar to it under an
embedding. Keyword queries are short phrases mined from a context, each
weighted by its similarity to the citance for later rank fusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .embedding import EmbeddingVector, cosine
from .errors import MalformedInput, ZeroVector
from .papers import PaperDocument, Sentence, sentences_with_citations
from .text import stopwords, tokenize

EmbedFn = Callable[[list[str]], list[EmbeddingVector]]

CONTEXT_KINDS = ("citance", "neighbors", "similar")
DEFAULT_KEYWORD_COUNT = 5


@dataclass(frozen=True)
class Citance:
    citance_id: str
    paper_id: str
    para_id: str
    sent_index: int
    text: str
    targets: tuple[str, ...]


@dataclass(frozen=True)
class SentenceRef:
    para_id: str
    sent_index: int
    text: str


@dataclass(frozen=True)
class CitanceContext:
    citance_id: str
    kind: str
    members: tuple[SentenceRef, ...]
    citance_index: int  # position of the citance within members
    degenerate: bool

    @property
    def citance_text(self) -> str:
        return self.members[self.citance_index].text

    @property
    def text(self) -> str:
        """Concatenated context, the query string for retrieval."""
        return " ".join(m.text for m in self.members)


@dataclass(frozen=True)
class KeywordQuery:
    citance_id: str
    context_kind: str
    phrase: str
    weight: float


def citance_id_for(paper_id: str, para_id: str, sent_index: int) -> str:
    return f"{paper_id}:{para_id}:{sent_index}"


def extract_citances(doc: PaperDocument) -> list[Citance]:
    """One citance per citation-bearing sentence, in document order.

    A sentence citing k distinct references yields a single citance with k
    targets (ordered by span position, duplicates collapsed).
    """
    out: list[Citance] = []
    for para, sent, spans in sentences_with_citations(doc):
        targets: list[str] = []
        for span in spans:
            if span.ref_key not in targets:
                targets.append(span.ref_key)
        out.append(
            Citance(
                citance_id=citance_id_for(doc.paper_id, para.para_id, sent.sent_index),
                paper_id=doc.paper_id,
                para_id=para.para_id,
                sent_index=sent.sent_index,
                text=sent.text,
                targets=tuple(targets),
            )
        )
    return out


def _require_paragraph(doc: PaperDocument, c: Citance):
    para = doc.paragraph(c.para_id)
    if para is None or c.sent_index >= len(para.sentences):
        raise MalformedInput(f"citance {c.citance_id} does not belong to paper {doc.paper_id}")
    return para


def _ref(para_id: str, s: Sentence) -> SentenceRef:
    return SentenceRef(para_id=para_id, sent_index=s.sent_index, text=s.text)


def citance_context(c: Citance) -> CitanceContext:
    """The degenerate-by-construction single-member context."""
    member = SentenceRef(para_id=c.para_id, sent_index=c.sent_index, text=c.text)
    return CitanceContext(
        citance_id=c.citance_id, kind="citance", members=(member,), citance_index=0, degenerate=False
    )


def neighbors_context(doc: PaperDocument, c: Citance) -> CitanceContext:
    """Citance plus the immediately preceding and following sentences,
    clipped at the paragraph boundary."""
    para = _require_paragraph(doc, c)
    lo = max(0, c.sent_index - 1)
    hi = min(len(para.sentences), c.sent_index + 2)
    members = tuple(_ref(para.para_id, s) for s in para.sentences[lo:hi])
    return CitanceContext(
        citance_id=c.citance_id,
        kind="neighbors",
        members=members,
        citance_index=c.sent_index - lo,
        degenerate=len(members) < 3,
    )


def similar_context(doc: PaperDocument, c: Citance, embed: EmbedFn) -> CitanceContext:
    """Citance plus its two most similar paragraph-mates.

    Candidates are the citance's paragraph-mates, excluding sentences
    byte-identical to the citance; ties and unscoreable candidates (either
    side embedding to the zero vector) resolve toward earlier positions and
    exclusion respectively. Members come back in document order.
    """
    para = _require_paragraph(doc, c)
    candidates = [
        s for s in para.sentences if s.sent_index != c.sent_index and s.text != c.text
    ]
    chosen: list[Sentence] = []
    if candidates:
        vectors = embed([c.text] + [s.text for s in candidates])
        citance_vec = vectors[0]
        scored: list[tuple[float, int, Sentence]] = []
        for s, vec in zip(candidates, vectors[1:]):
            try:
                score = cosine(citance_vec, vec)
            except ZeroVector:
                continue
            scored.append((score, s.sent_index, s))
        scored.sort(key=lambda t: (-t[0], t[1]))
        chosen = [s for _, _, s in scored[:2]]
    members_sents = sorted(chosen + [para.sentences[c.sent_index]], key=lambda s: s.sent_index)
    members = tuple(_ref(para.para_id, s) for s in members_sents)
    return CitanceContext(
        citance_id=c.citance_id,
        kind="similar",
        members=members,
        citance_index=next(i for i, m in enumerate(members) if m.sent_index == c.sent_index),
        degenerate=len(members) < 3,
    )


def build_context(doc: PaperDocument, c: Citance, kind: str, embed: EmbedFn | None = None) -> CitanceContext:
    if kind == "citance":
        return citance_context(c)
    if kind == "neighbors":
        return neighbors_context(doc, c)
    if kind == "similar":
        if embed is None:
            raise MalformedInput("similar context requires an embedding function")
        return similar_context(doc, c, embed)
    raise MalformedInput(f"unknown context kind: {kind!r}")


def candidate_phrases(text: str) -> list[str]:
    """Stopword-filtered word 1-2-grams, unique, in first-appearance order.

    Stopwords are dropped from the token stream first; bigrams are formed
    over the filtered stream, so a phrase may bridge a dropped stopword.
    """
    kept = [t for t in tokenize(text) if t not in stopwords()]
    seen: set[str] = set()
    out: list[str] = []
    for i, tok in enumerate(kept):
        for phrase in (tok, f"{tok} {kept[i + 1]}" if i + 1 < len(kept) else None):
            if phrase and phrase not in seen:
                seen.add(phrase)
                out.append(phrase)
    return out


def extract_keywords(ctx: CitanceContext, embed: EmbedFn, n: int = DEFAULT_KEYWORD_COUNT) -> list[KeywordQuery]:
    """Top-n candidate phrases by similarity to the whole context.

    Each returned query carries as weight its similarity to the citance
    sentence itself, which is what rank fusion uses downstream.
    """
    if n < 0:
        raise MalformedInput("keyword count must be >= 0")
    if n == 0:
        return []
    phrases = candidate_phrases(ctx.text)
    if not phrases:
        return []
    vectors = embed([ctx.text, ctx.citance_text] + phrases)
    ctx_vec, citance_vec = vectors[0], vectors[1]
    scored: list[tuple[float, str, EmbeddingVector]] = []
    for phrase, vec in zip(phrases, vectors[2:]):
        try:
            score = cosine(ctx_vec, vec)
        except ZeroVector:
            continue
        scored.append((score, phrase, vec))
    scored.sort(key=lambda t: (-t[0], t[1]))
    out: list[KeywordQuery] = []
    for score, phrase, vec in scored[:n]:
        try:
            weight = cosine(citance_vec, vec)
        except ZeroVector:
            weight = 0.0
        out.append(
            KeywordQuery(citance_id=ctx.citance_id, context_kind=ctx.kind, phrase=phrase, weight=weight)
        )
    return out


def context_to_dict(ctx: CitanceContext) -> dict:
    return {
        "citance_id": ctx.citance_id,
        "kind": ctx.kind,
        "members": [
            {"para_id": m.para_id, "sent_index": m.sent_index, "text": m.text}
            for m in ctx.members
        ],
        "citance_index": ctx.citance_index,
        "degenerate": ctx.degenerate,
    }


def citance_to_dict(c: Citance) -> dict:
    return {
        "citance_id": c.citance_id,
        "paper_id": c.paper_id,
        "para_id": c.para_id,
        "sent_index": c.sent_index,
        "text": c.text,
        "targets": list(c.targets),
    }
