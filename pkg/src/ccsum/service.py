"""HTTP facade over the corpus, retrieval, and summarization, with a
persistent write-once summary cache.

Reads never mutate state. Summary generation is de-duplicated per cache
key: concurrent identical requests share one provider call, and completed
entries are appended to a JSON-lines store that survives restarts.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import Future
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .citances import (
    CONTEXT_KINDS,
    Citance,
    citance_to_dict,
    context_to_dict,
    extract_citances,
    extract_keywords,
)
from .embedding import ProviderConfig, embedding_fn
from .errors import (
    CcsumError,
    Conflict,
    MalformedInput,
    NotFound,
    ProviderRejected,
    ProviderTimeout,
    StorageFailure,
    TargetUnavailable,
)
from .papers import document_to_dict
from .pipeline import Corpus, Setup, Task, contexts_for, run_task, summary_cache_key
from .retrieval import RetrievalConfig, normalize_granularity, retrieve_for_citance
from .summarize import (
    DEFAULT_TEMPLATE_FOR_GRANULARITY,
    PROMPT_TEMPLATES,
    summary_from_dict,
    summary_to_dict,
)

_STATUS_FOR = {
    "NotFound": 404,
    "MalformedInput": 400,
    "MissingField": 400,
    "DanglingRef": 400,
    "EmptyInput": 400,
    "ScoreOutOfRange": 400,
    "UnknownCriterion": 400,
    "TargetUnavailable": 409,
    "Conflict": 409,
    "ProviderTimeout": 504,
    "ProviderRejected": 502,
    "EmbeddingUnavailable": 502,
    "StorageFailure": 500,
}


class SummaryCache:
    """Append-only JSON-lines store with write-once semantics per key."""

    def __init__(self, path: str | Path | None = None) -> None:
        self._path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            try:
                for line in self._path.read_text("utf-8").splitlines():
                    if not line.strip():
                        continue
                    row = json.loads(line)
                    self._entries[row["key"]] = row
            except (OSError, json.JSONDecodeError, KeyError) as exc:
                raise StorageFailure(f"cannot load summary cache {self._path}: {exc}") from exc

    def get(self, key: str) -> Optional[dict]:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, entry: dict) -> None:
        """Idempotent for identical content; differing rewrites are rejected."""
        row = {"key": key, **entry}
        encoded = json.dumps(row, ensure_ascii=False, sort_keys=True)
        with self._lock:
            existing = self._entries.get(key)
            if existing is not None:
                if json.dumps(existing, ensure_ascii=False, sort_keys=True) == encoded:
                    return
                raise Conflict(f"cache key already written with different content: {key}")
            if self._path is not None:
                try:
                    with self._path.open("a", encoding="utf-8") as fh:
                        fh.write(encoded + "\n")
                        fh.flush()
                except OSError as exc:
                    raise StorageFailure(f"cannot append to {self._path}: {exc}") from exc
            self._entries[key] = json.loads(encoded)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class ServiceState:
    """Shared corpus, providers, cache, and the in-flight de-dup table."""

    def __init__(
        self,
        corpus: Corpus,
        embed_cfg: ProviderConfig | None = None,
        gen_endpoint: str = "mock",
        gen_model: str = "mock-echo",
        cache: SummaryCache | None = None,
        keyword_count: int = 5,
        generate: Callable[..., dict] | None = None,
    ) -> None:
        self.corpus = corpus
        self.embed = embedding_fn(embed_cfg or ProviderConfig())
        self.gen_endpoint = gen_endpoint
        self.gen_model = gen_model
        # `or` would discard an empty file-backed cache (len() == 0 is falsy)
        self.cache = cache if cache is not None else SummaryCache()
        self.keyword_count = keyword_count
        # Injectable single-cell runner, handy for counting generations.
        self._run_cell = generate or self._default_run_cell
        self._inflight: dict[str, Future] = {}
        self._inflight_lock = threading.Lock()
        self._citances: dict[str, tuple[str, Citance]] = {}
        for doc in corpus.docs.values():
            for citance in extract_citances(doc):
                self._citances[citance.citance_id] = (doc.paper_id, citance)

    def citance(self, citance_id: str):
        row = self._citances.get(citance_id)
        if row is None:
            raise NotFound(f"unknown citance: {citance_id}")
        paper_id, citance = row
        return self.corpus.require(paper_id), citance

    def paper(self, paper_id: str):
        return self.corpus.require(paper_id)

    def _default_run_cell(self, task: Task, setup: Setup, granularity: str, template: str) -> dict:
        output = run_task(
            self.corpus,
            task,
            setup,
            granularity,
            self.embed,
            gen_endpoint=self.gen_endpoint,
            gen_model=self.gen_model,
            template=template,
            keyword_count=self.keyword_count,
        )
        return {
            "summary": summary_to_dict(output.summary),
            "hits": [
                {"unit_id": uid, "score": score, "text": text}
                for (uid, score), text in zip(
                    output.retrieval.hits.hits, output.retrieval.retrieved_texts
                )
            ],
        }

    def _resolve_task(self, citance_id: str, target_paper_id: str | None) -> Task:
        doc, citance = self.citance(citance_id)
        refs = list(citance.targets)
        if target_paper_id is not None:
            for ref in refs:
                target = self.corpus.resolve_target(doc, ref)
                if target is not None and target.paper_id == target_paper_id:
                    return Task(citance=citance, target_ref=ref, target_paper_id=target.paper_id)
            raise NotFound(f"citance {citance_id} does not cite paper {target_paper_id}")
        # Default to the first target; its full text may still be missing.
        ref = refs[0]
        target = self.corpus.resolve_target(doc, ref)
        if target is None:
            entry = doc.bib_entries[ref]
            missing = entry.linked_paper_id or f"ref:{ref}"
            return Task(citance=citance, target_ref=ref, target_paper_id=missing)
        return Task(citance=citance, target_ref=ref, target_paper_id=target.paper_id)

    def panel(
        self,
        citance_id: str,
        context_kind: str,
        model: str,
        granularity: str,
        use_keywords: bool,
        template: str | None = None,
        target_paper_id: str | None = None,
    ) -> dict:
        """Everything the reader panel shows for one citance and setup:
        contexts, the cited paper's abstract, retrieval hits, and the cached
        or freshly generated summary."""
        granularity = normalize_granularity(granularity)
        if context_kind not in CONTEXT_KINDS:
            raise MalformedInput(f"unknown context kind: {context_kind!r}")
        if model not in ("bm25", "dense"):
            raise MalformedInput(f"unknown retrieval model: {model!r}")
        doc, citance = self.citance(citance_id)
        setup = Setup(context_kind=context_kind, model=model, use_keywords=use_keywords)
        template_name = template or DEFAULT_TEMPLATE_FOR_GRANULARITY[granularity]
        if template_name not in PROMPT_TEMPLATES:
            raise MalformedInput(f"unknown template: {template_name!r}")
        task = self._resolve_task(citance_id, target_paper_id)
        contexts = contexts_for(doc, citance, self.embed)

        target_doc = self.corpus.get(task.target_paper_id)
        abstract = (
            [p.text for p in target_doc.abstract_paragraphs] if target_doc is not None else []
        )
        payload = {
            "citance": citance_to_dict(citance),
            "contexts": {kind: context_to_dict(ctx) for kind, ctx in contexts.items()},
            "target_paper_id": task.target_paper_id,
            "abstract": abstract,
            "setup": {
                "context_kind": context_kind,
                "model": model,
                "granularity": granularity,
                "use_keywords": use_keywords,
                "template": template_name,
            },
        }
        if target_doc is None or not target_doc.has_body:
            err = TargetUnavailable(f"cited paper {task.target_paper_id} has no ingested full text")
            payload.update(
                target_available=False,
                hits=[],
                summary=None,
                cache_hit=False,
                error={"code": "TargetUnavailable", "message": str(err), "retriable": False},
            )
            return payload

        key = summary_cache_key(
            citance_id, task.target_paper_id, setup, granularity, template_name,
            self.gen_model, 0.0,
        )
        entry, cache_hit = self._entry_for(key, task, setup, granularity, template_name)
        payload.update(
            target_available=True,
            hits=entry["hits"],
            summary=entry["summary"],
            cache_hit=cache_hit,
        )
        return payload

    def _entry_for(
        self, key: str, task: Task, setup: Setup, granularity: str, template: str
    ) -> tuple[dict, bool]:
        """Cache lookup with per-key de-duplication of concurrent generations."""
        owner = False
        with self._inflight_lock:
            cached = self.cache.get(key)
            if cached is not None:
                return cached, True
            fut = self._inflight.get(key)
            if fut is None:
                fut = Future()
                self._inflight[key] = fut
                owner = True
        if not owner:
            return fut.result(), False
        try:
            entry = self._run_cell(task, setup, granularity, template)
            self.cache.put(key, entry)
            stored = self.cache.get(key)
            fut.set_result(stored)
            return stored, False
        except BaseException as exc:
            fut.set_exception(exc)
            raise
        finally:
            with self._inflight_lock:
                self._inflight.pop(key, None)


class RetrieveRequest(BaseModel):
    citance_id: str
    context_kind: str = "similar"
    model: str = "bm25"
    granularity: str = "sentences"
    use_keywords: bool = False
    target_paper_id: Optional[str] = None


class SummarizeRequest(RetrieveRequest):
    template: Optional[str] = None


def create_app(state: ServiceState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="citance-contextualized summarization service")

    @app.exception_handler(CcsumError)
    async def _ccsum_error(_, exc: CcsumError):
        code = type(exc).__name__
        return JSONResponse(
            status_code=_STATUS_FOR.get(code, 500),
            content={"code": code, "message": str(exc), "retriable": exc.retriable},
        )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "papers": len(state.corpus), "cached_summaries": len(state.cache)}

    @app.get("/papers/{paper_id}")
    def get_paper(paper_id: str) -> dict:
        return document_to_dict(state.paper(paper_id))

    @app.get("/papers/{paper_id}/citances")
    def get_citances(paper_id: str) -> dict:
        doc = state.paper(paper_id)
        rows = []
        for citance in extract_citances(doc):
            row = citance_to_dict(citance)
            row["target_paper_ids"] = [
                (doc.bib_entries[ref].linked_paper_id if ref in doc.bib_entries else None)
                for ref in citance.targets
            ]
            rows.append(row)
        return {"paper_id": paper_id, "citances": rows}

    @app.get("/citances/{citance_id}/contexts")
    def get_contexts(citance_id: str) -> dict:
        doc, citance = state.citance(citance_id)
        contexts = contexts_for(doc, citance, state.embed)
        return {
            "citance": citance_to_dict(citance),
            "contexts": {kind: context_to_dict(ctx) for kind, ctx in contexts.items()},
        }

    @app.post("/retrieve")
    def retrieve(req: RetrieveRequest) -> dict:
        granularity = normalize_granularity(req.granularity)
        doc, citance = state.citance(req.citance_id)
        cfg = RetrievalConfig(
            model=req.model, context_kind=req.context_kind, use_keywords=req.use_keywords
        )
        task = state._resolve_task(req.citance_id, req.target_paper_id)
        target = state.corpus.get(task.target_paper_id)
        ctx = contexts_for(doc, citance, state.embed)[req.context_kind]
        keywords = (
            extract_keywords(ctx, state.embed, n=state.keyword_count)
            if req.use_keywords
            else None
        )
        result = retrieve_for_citance(
            citance, ctx, keywords, target, cfg, embed=state.embed, granularity=granularity
        )
        return {
            "citance_id": req.citance_id,
            "target_paper_id": task.target_paper_id,
            "granularity": granularity,
            "hits": [
                {"unit_id": uid, "score": score, "text": text}
                for (uid, score), text in zip(result.hits.hits, result.retrieved_texts)
            ],
        }

    @app.post("/summarize")
    def summarize(req: SummarizeRequest) -> dict:
        return state.panel(
            req.citance_id,
            req.context_kind,
            req.model,
            req.granularity,
            req.use_keywords,
            template=req.template,
            target_paper_id=req.target_paper_id,
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
