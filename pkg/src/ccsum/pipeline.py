"""End-to-end orchestration: corpus loading, task enumeration, and the
retrieve-then-summarize run over a grid of setups.

A task is one (citance, cited-paper) pair; a citance citing k resolvable
papers yields k tasks. The full setup grid crosses three context kinds,
the keyword toggle, and two scoring models; the two presets carried into
summarization by default are (similar, bm25) and (citance, dense).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .citances import (
    CONTEXT_KINDS,
    Citance,
    CitanceContext,
    EmbedFn,
    KeywordQuery,
    build_context,
    extract_citances,
    extract_keywords,
)
from .errors import MalformedInput, NotFound, TargetUnavailable
from .papers import PaperDocument, load_document
from .retrieval import (
    GRANULARITIES,
    RetrievalConfig,
    RetrievalResult,
    retrieve_for_citance,
)
from .summarize import (
    DEFAULT_TEMPLATE_FOR_GRANULARITY,
    GenerationRequest,
    Summary,
    build_prompt,
    assemble_input,
    generate_summary,
)

MODELS = ("bm25", "dense")


def document_files(path: str | Path) -> list[Path]:
    """The .json documents under a directory; run manifests are reserved
    names, not documents."""
    root = Path(path)
    if root.is_file():
        return [root]
    return sorted(p for p in root.glob("*.json") if not p.name.endswith("manifest.json"))


@dataclass(frozen=True)
class Setup:
    context_kind: str
    model: str
    use_keywords: bool = False

    @property
    def descriptor(self) -> str:
        kw = "keywords" if self.use_keywords else "plain"
        return f"{self.context_kind}-{self.model}-{kw}"


ALL_SETUPS: tuple[Setup, ...] = tuple(
    Setup(context_kind=ck, model=m, use_keywords=kw)
    for ck in CONTEXT_KINDS
    for kw in (False, True)
    for m in MODELS
)

# The two best-performing setups, used by default for summarization:
# similar context with bm25, citance context with dense scoring.
DISTINGUISHED_SETUPS: tuple[Setup, ...] = (
    Setup(context_kind="similar", model="bm25", use_keywords=False),
    Setup(context_kind="citance", model="dense", use_keywords=False),
)


@dataclass(frozen=True)
class Task:
    citance: Citance
    target_ref: str
    target_paper_id: str


class Corpus:
    """In-memory store of parsed papers keyed by paper_id."""

    def __init__(self, docs: Iterable[PaperDocument]) -> None:
        self.docs: dict[str, PaperDocument] = {}
        for doc in docs:
            if doc.paper_id in self.docs:
                raise MalformedInput(f"duplicate paper_id in corpus: {doc.paper_id}")
            self.docs[doc.paper_id] = doc

    @classmethod
    def from_dir(cls, path: str | Path) -> "Corpus":
        files = document_files(path)
        if not files:
            raise MalformedInput(f"no .json documents under {path}")
        return cls(load_document(f.read_bytes()) for f in files)

    def get(self, paper_id: str) -> PaperDocument | None:
        return self.docs.get(paper_id)

    def require(self, paper_id: str) -> PaperDocument:
        doc = self.docs.get(paper_id)
        if doc is None:
            raise NotFound(f"unknown paper: {paper_id}")
        return doc

    def __len__(self) -> int:
        return len(self.docs)

    def citing_documents(self) -> list[PaperDocument]:
        return [d for d in self.docs.values() if d.has_citances]

    def resolve_target(self, doc: PaperDocument, ref_key: str) -> PaperDocument | None:
        """The ingested full text a bib reference points at, if any."""
        entry = doc.bib_entries.get(ref_key)
        if entry is None or entry.linked_paper_id is None:
            return None
        return self.docs.get(entry.linked_paper_id)


def enumerate_tasks(corpus: Corpus) -> tuple[list[Task], list[tuple[Citance, str]]]:
    """All (citance, target) tasks plus the pairs whose cited full text is
    missing, both in deterministic document order."""
    tasks: list[Task] = []
    unavailable: list[tuple[Citance, str]] = []
    for doc in sorted(corpus.citing_documents(), key=lambda d: d.paper_id):
        for citance in extract_citances(doc):
            for ref in citance.targets:
                target = corpus.resolve_target(doc, ref)
                if target is None or not target.has_body:
                    unavailable.append((citance, ref))
                else:
                    tasks.append(
                        Task(citance=citance, target_ref=ref, target_paper_id=target.paper_id)
                    )
    return tasks, unavailable


def contexts_for(doc: PaperDocument, citance: Citance, embed: EmbedFn) -> dict[str, CitanceContext]:
    return {kind: build_context(doc, citance, kind, embed) for kind in CONTEXT_KINDS}


def summary_cache_key(
    citance_id: str,
    target_paper_id: str,
    setup: Setup,
    granularity: str,
    template: str,
    generator: str,
    temperature: float,
) -> str:
    kw = "1" if setup.use_keywords else "0"
    return "|".join(
        (
            citance_id,
            target_paper_id,
            setup.context_kind,
            setup.model,
            f"kw{kw}",
            granularity,
            template,
            generator,
            f"t{temperature:g}",
        )
    )


@dataclass(frozen=True)
class TaskOutput:
    task: Task
    setup: Setup
    granularity: str
    retrieval: RetrievalResult
    summary: Summary
    cache_key: str


def run_task(
    corpus: Corpus,
    task: Task,
    setup: Setup,
    granularity: str,
    embed: EmbedFn,
    gen_endpoint: str = "mock",
    gen_model: str = "mock-echo",
    template: str | None = None,
    keyword_count: int = 5,
    max_output_tokens: int = 512,
    contexts: dict[str, CitanceContext] | None = None,
    timeout: float = 60.0,
) -> TaskOutput:
    """Retrieve for one (task, setup, granularity) cell and summarize it."""
    doc = corpus.require(task.citance.paper_id)
    target = corpus.get(task.target_paper_id)
    if contexts is None:
        contexts = contexts_for(doc, task.citance, embed)
    ctx = contexts[setup.context_kind]
    keywords: list[KeywordQuery] | None = None
    if setup.use_keywords:
        keywords = extract_keywords(ctx, embed, n=keyword_count)
    cfg = RetrievalConfig(
        model=setup.model, context_kind=setup.context_kind, use_keywords=setup.use_keywords
    )
    retrieval = retrieve_for_citance(
        task.citance, ctx, keywords, target, cfg, embed=embed, granularity=granularity
    )
    if not retrieval.retrieved_texts:
        raise TargetUnavailable(
            f"no retrievable content in {task.target_paper_id} for {task.citance.citance_id}"
        )
    template_name = template or DEFAULT_TEMPLATE_FOR_GRANULARITY[granularity]
    prompt = build_prompt(template_name, assemble_input(retrieval.retrieved_texts, granularity))
    request = GenerationRequest(
        prompt=prompt,
        model_name=gen_model,
        temperature=0.0,
        max_output_tokens=max_output_tokens,
        endpoint=gen_endpoint,
        timeout=timeout,
    )
    result = generate_summary(request)
    summary = Summary(
        citance_id=task.citance.citance_id,
        target_paper_id=task.target_paper_id,
        context_kind=setup.context_kind,
        model=setup.model,
        granularity=granularity,
        use_keywords=setup.use_keywords,
        template=template_name,
        text=result.text,
        source_texts=retrieval.retrieved_texts,
        generator=result.model_name,
        created_at=result.created_at,
    )
    key = summary_cache_key(
        task.citance.citance_id,
        task.target_paper_id,
        setup,
        granularity,
        template_name,
        gen_model,
        request.temperature,
    )
    return TaskOutput(
        task=task,
        setup=setup,
        granularity=granularity,
        retrieval=retrieval,
        summary=summary,
        cache_key=key,
    )


def run_pipeline(
    corpus: Corpus,
    embed: EmbedFn,
    setups: Sequence[Setup] = DISTINGUISHED_SETUPS,
    granularities: Sequence[str] = GRANULARITIES,
    gen_endpoint: str = "mock",
    gen_model: str = "mock-echo",
    template: str | None = None,
    keyword_count: int = 5,
    jobs: int = 1,
) -> tuple[list[TaskOutput], list[tuple[Citance, str]]]:
    """Summarize every task under every (setup, granularity) cell.

    Output order is deterministic: tasks by (citance_id, target), then the
    given setup order, then sentence before paragraph granularity.
    """
    tasks, unavailable = enumerate_tasks(corpus)
    context_cache: dict[str, dict[str, CitanceContext]] = {}
    for task in tasks:
        if task.citance.citance_id not in context_cache:
            doc = corpus.require(task.citance.paper_id)
            context_cache[task.citance.citance_id] = contexts_for(doc, task.citance, embed)

    cells = [
        (task, setup, granularity)
        for task in sorted(tasks, key=lambda t: (t.citance.citance_id, t.target_paper_id))
        for setup in setups
        for granularity in granularities
    ]

    def one(cell: tuple[Task, Setup, str]) -> TaskOutput:
        task, setup, granularity = cell
        return run_task(
            corpus,
            task,
            setup,
            granularity,
            embed,
            gen_endpoint=gen_endpoint,
            gen_model=gen_model,
            template=template,
            keyword_count=keyword_count,
            contexts=context_cache[task.citance.citance_id],
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(one, cells))
    else:
        outputs = [one(cell) for cell in cells]
    return outputs, unavailable
