"""Document model: papers parsed into sentence-segmented, citation-annotated
paragraphs.

The raw input format is a single JSON schema (see ``parse_document``). After
parsing, every paragraph carries offset-bearing sentences that reproduce the
paragraph text byte-exactly, and no citation span crosses a sentence
boundary (sentences straddled by a span are merged).
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import DanglingRef, MalformedInput, MissingField
from .text import segment_spans, tokenize


@dataclass(frozen=True)
class Sentence:
    sent_index: int
    char_start: int
    char_end: int
    text: str


@dataclass(frozen=True)
class CitationSpan:
    char_start: int
    char_end: int
    ref_key: str


@dataclass(frozen=True)
class Paragraph:
    para_id: str
    text: str
    sentences: tuple[Sentence, ...]
    cite_spans: tuple[CitationSpan, ...]


@dataclass(frozen=True)
class BibEntry:
    ref_key: str
    title: str
    linked_paper_id: str | None


@dataclass(frozen=True)
class Section:
    title: str
    paragraphs: tuple[Paragraph, ...]


@dataclass(frozen=True)
class PaperDocument:
    paper_id: str
    title: str
    abstract_paragraphs: tuple[Paragraph, ...]
    body_sections: tuple[Section, ...]
    bib_entries: dict[str, BibEntry] = field(default_factory=dict)

    def iter_paragraphs(self) -> Iterator[Paragraph]:
        """All paragraphs in document order, abstract first."""
        yield from self.abstract_paragraphs
        for section in self.body_sections:
            yield from section.paragraphs

    def paragraph(self, para_id: str) -> Paragraph | None:
        for para in self.iter_paragraphs():
            if para.para_id == para_id:
                return para
        return None

    @property
    def has_citances(self) -> bool:
        return any(p.cite_spans for p in self.iter_paragraphs())

    @property
    def has_body(self) -> bool:
        return any(section.paragraphs for section in self.body_sections)


@dataclass(frozen=True)
class CorpusStats:
    paper_count: int
    citance_count: int
    mean_citances_per_paper: float
    mean_citance_tokens: float
    median_citance_tokens: float


def segment_paragraph(text: str) -> list[Sentence]:
    """Offset-bearing sentences of ``text``; empty text yields an empty list."""
    return [
        Sentence(sent_index=i, char_start=s, char_end=e, text=text[s:e])
        for i, (s, e) in enumerate(segment_spans(text))
    ]


def _merge_straddled(
    sentences: list[Sentence], spans: list[CitationSpan], text: str
) -> list[Sentence]:
    """Merge sentences so every citation span falls inside exactly one.

    The splitter can cut through a span (e.g. a parse artifact puts the
    terminal inside the cited range); merging the straddled run keeps the
    span-containment invariant without touching the underlying text.
    """
    bounds = [(s.char_start, s.char_end) for s in sentences]
    for span in spans:
        first = last = None
        for i, (ss, se) in enumerate(bounds):
            if ss < span.char_end and span.char_start < se:
                if first is None:
                    first = i
                last = i
        if first is None:
            raise MalformedInput(
                f"citation span [{span.char_start},{span.char_end}) covers no sentence"
            )
        lo = min(bounds[first][0], span.char_start)
        hi = max(bounds[last][1], span.char_end)
        bounds[first : last + 1] = [(lo, hi)]
    return [
        Sentence(sent_index=i, char_start=s, char_end=e, text=text[s:e])
        for i, (s, e) in enumerate(bounds)
    ]


def _build_paragraph(para_id: str, text: str, raw_spans: list[dict], bib_keys: set[str]) -> Paragraph:
    spans: list[CitationSpan] = []
    for raw in raw_spans:
        if not isinstance(raw, dict):
            raise MalformedInput(f"{para_id}: cite_spans entries must be objects")
        for key in ("start", "end", "ref_id"):
            if key not in raw:
                raise MissingField(f"{para_id}: cite_span missing '{key}'")
        start, end, ref = raw["start"], raw["end"], raw["ref_id"]
        if not isinstance(start, int) or not isinstance(end, int) or not isinstance(ref, str):
            raise MalformedInput(f"{para_id}: cite_span fields have wrong types")
        if not (0 <= start < end <= len(text)):
            raise MalformedInput(
                f"{para_id}: cite_span [{start},{end}) out of bounds for {len(text)}-char text"
            )
        if ref not in bib_keys:
            raise DanglingRef(f"{para_id}: cite_span ref '{ref}' not in bib_entries")
        spans.append(CitationSpan(char_start=start, char_end=end, ref_key=ref))
    sentences = _merge_straddled(segment_paragraph(text), spans, text)
    return Paragraph(
        para_id=para_id,
        text=text,
        sentences=tuple(sentences),
        cite_spans=tuple(sorted(spans, key=lambda s: (s.char_start, s.char_end, s.ref_key))),
    )


def parse_document(raw: bytes | str, fmt: str = "json") -> PaperDocument:
    """Parse one raw paper file into a fully segmented document.

    Schema: {"paper_id", "title", "abstract": [str],
    "body": [{"section", "paragraphs": [{"text", "cite_spans":
    [{"start", "end", "ref_id"}]}]}], "bib_entries": {ref_id: {"title",
    "linked_paper_id"}}}. Offsets are 0-based, end-exclusive, in Unicode
    scalar values. Documents without citations parse fine; they simply
    yield no citances downstream.
    """
    if fmt != "json":
        raise MalformedInput(f"unsupported input format: {fmt!r}")
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInput(f"input is not valid UTF-8: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"input is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedInput("top-level JSON value must be an object")

    paper_id = data.get("paper_id")
    if not isinstance(paper_id, str) or not paper_id:
        raise MissingField("paper_id missing or empty")
    if "body" not in data:
        raise MissingField("body missing")
    body = data["body"]
    if not isinstance(body, list):
        raise MalformedInput("body must be a list of sections")

    title = data.get("title", "")
    if not isinstance(title, str):
        raise MalformedInput("title must be a string")

    bib_raw = data.get("bib_entries", {})
    if not isinstance(bib_raw, dict):
        raise MalformedInput("bib_entries must be an object")
    bib: dict[str, BibEntry] = {}
    for ref_key, entry in bib_raw.items():
        if not isinstance(entry, dict):
            raise MalformedInput(f"bib entry '{ref_key}' must be an object")
        linked = entry.get("linked_paper_id")
        if linked is not None and not isinstance(linked, str):
            raise MalformedInput(f"bib entry '{ref_key}': linked_paper_id must be string or null")
        bib[ref_key] = BibEntry(
            ref_key=ref_key, title=str(entry.get("title", "")), linked_paper_id=linked
        )

    ordinal = 0

    def next_para_id() -> str:
        nonlocal ordinal
        pid = f"p{ordinal:04d}"
        ordinal += 1
        return pid

    abstract_raw = data.get("abstract", [])
    if not isinstance(abstract_raw, list) or not all(isinstance(p, str) for p in abstract_raw):
        raise MalformedInput("abstract must be a list of strings")
    abstract = tuple(
        _build_paragraph(next_para_id(), text, [], set(bib)) for text in abstract_raw
    )

    sections: list[Section] = []
    for sec in body:
        if not isinstance(sec, dict) or "paragraphs" not in sec:
            raise MissingField("body section missing 'paragraphs'")
        sec_title = sec.get("section", "")
        if not isinstance(sec_title, str):
            raise MalformedInput("section title must be a string")
        paragraphs = []
        for para in sec["paragraphs"]:
            if not isinstance(para, dict) or "text" not in para:
                raise MissingField("paragraph missing 'text'")
            if not isinstance(para["text"], str):
                raise MalformedInput("paragraph text must be a string")
            spans = para.get("cite_spans", [])
            if not isinstance(spans, list):
                raise MalformedInput("cite_spans must be a list")
            paragraphs.append(_build_paragraph(next_para_id(), para["text"], spans, set(bib)))
        sections.append(Section(title=sec_title, paragraphs=tuple(paragraphs)))

    return PaperDocument(
        paper_id=paper_id,
        title=title,
        abstract_paragraphs=abstract,
        body_sections=tuple(sections),
        bib_entries=bib,
    )


def sentences_with_citations(
    doc: PaperDocument,
) -> list[tuple[Paragraph, Sentence, list[CitationSpan]]]:
    """Each sentence containing at least one citation span, document order."""
    out = []
    for para in doc.iter_paragraphs():
        if not para.cite_spans:
            continue
        for sent in para.sentences:
            spans = [
                s
                for s in para.cite_spans
                if s.char_start >= sent.char_start and s.char_end <= sent.char_end
            ]
            if spans:
                out.append((para, sent, spans))
    return out


def compute_corpus_stats(corpus: Iterable[PaperDocument]) -> CorpusStats:
    """Counts over papers that contain at least one citance."""
    paper_count = 0
    token_lengths: list[int] = []
    for doc in corpus:
        rows = sentences_with_citations(doc)
        if not rows:
            continue
        paper_count += 1
        token_lengths.extend(len(tokenize(sent.text)) for _, sent, _ in rows)
    citance_count = len(token_lengths)
    if citance_count == 0:
        return CorpusStats(paper_count, 0, 0.0, 0.0, 0.0)
    return CorpusStats(
        paper_count=paper_count,
        citance_count=citance_count,
        mean_citances_per_paper=citance_count / paper_count,
        mean_citance_tokens=statistics.mean(token_lengths),
        median_citance_tokens=float(statistics.median(token_lengths)),
    )


def document_to_dict(doc: PaperDocument) -> dict:
    """Normalized serialization (the output of the ingest step)."""

    def para(p: Paragraph) -> dict:
        return {
            "para_id": p.para_id,
            "text": p.text,
            "sentences": [
                {
                    "sent_index": s.sent_index,
                    "char_start": s.char_start,
                    "char_end": s.char_end,
                    "text": s.text,
                }
                for s in p.sentences
            ],
            "cite_spans": [
                {"start": s.char_start, "end": s.char_end, "ref_id": s.ref_key}
                for s in p.cite_spans
            ],
        }

    return {
        "paper_id": doc.paper_id,
        "title": doc.title,
        "abstract_paragraphs": [para(p) for p in doc.abstract_paragraphs],
        "body_sections": [
            {"section": sec.title, "paragraphs": [para(p) for p in sec.paragraphs]}
            for sec in doc.body_sections
        ],
        "bib_entries": {
            k: {"title": e.title, "linked_paper_id": e.linked_paper_id}
            for k, e in sorted(doc.bib_entries.items())
        },
    }


def document_from_dict(data: dict) -> PaperDocument:
    """Inverse of :func:`document_to_dict` for previously ingested files."""

    def para(p: dict) -> Paragraph:
        return Paragraph(
            para_id=p["para_id"],
            text=p["text"],
            sentences=tuple(
                Sentence(s["sent_index"], s["char_start"], s["char_end"], s["text"])
                for s in p["sentences"]
            ),
            cite_spans=tuple(
                CitationSpan(s["start"], s["end"], s["ref_id"]) for s in p["cite_spans"]
            ),
        )

    try:
        return PaperDocument(
            paper_id=data["paper_id"],
            title=data.get("title", ""),
            abstract_paragraphs=tuple(para(p) for p in data["abstract_paragraphs"]),
            body_sections=tuple(
                Section(title=s["section"], paragraphs=tuple(para(p) for p in s["paragraphs"]))
                for s in data["body_sections"]
            ),
            bib_entries={
                k: BibEntry(ref_key=k, title=e.get("title", ""), linked_paper_id=e.get("linked_paper_id"))
                for k, e in data["bib_entries"].items()
            },
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"not a normalized document: {exc}") from exc


def load_document(raw: bytes | str) -> PaperDocument:
    """Accept either the raw input schema or the normalized form."""
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"input is not valid JSON: {exc}") from exc
    if isinstance(data, dict) and "abstract_paragraphs" in data:
        return document_from_dict(data)
    return parse_document(raw)
