"""Batch entry points for the pipeline: ingest, index, extract, retrieve,
summarize, eval, stats, serve.

Exit codes: 0 success, 1 validation error (bad arguments or malformed
input), 2 provider or IO failure. Outputs are written atomically
(temp-and-rename) and every run leaves a manifest next to its outputs.
With the offline providers (--provider mock/fallback) re-running a command
on unchanged inputs produces byte-identical outputs, manifests aside.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Sequence

from .citances import build_context, context_to_dict, citance_to_dict, extract_citances
from .embedding import FALLBACK_TAG, ProviderConfig, embedding_fn
from .errors import (
    CcsumError,
    EmbeddingUnavailable,
    ProviderRejected,
    ProviderTimeout,
    StorageFailure,
)
from .evaluation import aggregate_report, graded_ranking, read_judgments_tsv, read_ratings_tsv
from .papers import compute_corpus_stats, document_to_dict, load_document, parse_document
from .pipeline import (
    ALL_SETUPS,
    DISTINGUISHED_SETUPS,
    Corpus,
    Setup,
    document_files,
    run_pipeline,
)
from .retrieval import (
    GRANULARITIES,
    build_index,
    normalize_granularity,
    save_index,
    units_for_document,
)
from .summarize import MOCK_TAG, summary_to_dict

PROVIDER_CHOICES = ("remote", "mock", "fallback")
BUNDLED_INPUT = "bundled"  # alias for the packaged 3-paper corpus

_VALIDATION_ERRORS = 1
_PROVIDER_ERRORS = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1, not argparse's 2
        raise _UsageError(message)


def _now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def load_config(path: str | Path | None) -> dict[str, str]:
    """Flat key=value file; blank lines and #-comments ignored."""
    if path is None:
        return {}
    cfg: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise _UsageError(f"{path}:{lineno}: expected key=value")
        key, value = stripped.split("=", 1)
        cfg[key.strip()] = value.strip()
    return cfg


def bundled_corpus_dir() -> Path:
    return Path(str(resources.files("ccsum.data").joinpath("mini_corpus")))


def _resolve_input(value: str) -> Path:
    if value == BUNDLED_INPUT:
        return bundled_corpus_dir()
    return Path(value)


def _write_text_atomic(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except OSError:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json_atomic(path: Path, obj) -> None:
    _write_text_atomic(path, json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n")


def _write_jsonl_atomic(path: Path, rows: Sequence[dict]) -> None:
    body = "".join(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n" for row in rows)
    _write_text_atomic(path, body)


def _manifest(
    command: str,
    args: argparse.Namespace,
    cfg: dict[str, str],
    inputs: list[str],
    outputs: list[str],
    started: str,
    exit_code: int,
) -> dict:
    return {
        "command": command,
        "argv": [a for a in sys.argv[1:]] if sys.argv else [],
        "config": cfg,
        "inputs": inputs,
        "outputs": outputs,
        "started_at": started,
        "finished_at": _now(),
        "exit_code": exit_code,
        "seed": int(cfg.get("seed", "0")),
    }


def _manifest_path(output: Path) -> Path:
    if output.suffix:
        return output.with_name(output.name + ".manifest.json")
    return output / "manifest.json"


def _embed_cfg(args: argparse.Namespace, cfg: dict[str, str]) -> ProviderConfig:
    provider = getattr(args, "provider", "fallback")
    if provider in ("mock", "fallback"):
        endpoint = FALLBACK_TAG
    else:
        endpoint = cfg.get("embed_endpoint", "")
        if not endpoint:
            raise _UsageError("--provider remote requires embed_endpoint in the config file")
    return ProviderConfig(
        endpoint=endpoint,
        model_name=cfg.get("embed_model", "hashed-bow-256"),
        batch_size=int(cfg.get("embed_batch_size", "32")),
        timeout=float(cfg.get("embed_timeout", "30")),
        api_key_env=cfg.get("embed_api_key_env", "CCSUM_EMBED_API_KEY"),
    )


def _gen_endpoint(args: argparse.Namespace, cfg: dict[str, str]) -> tuple[str, str]:
    provider = getattr(args, "provider", "mock")
    if provider in ("mock", "fallback"):
        return MOCK_TAG, cfg.get("gen_model", "mock-echo")
    endpoint = cfg.get("gen_endpoint", "")
    if not endpoint:
        raise _UsageError("--provider remote requires gen_endpoint in the config file")
    return endpoint, cfg.get("gen_model", "remote-model")


def _parse_setups(args: argparse.Namespace) -> tuple[list[Setup], list[str]]:
    """--setup selects {context}-{model}-{granularity}, 'distinguished', or 'all';
    --keywords toggles the keyword dimension for explicit triples."""
    keywords = getattr(args, "keywords", "off") == "on"
    raw = getattr(args, "setup", "distinguished")
    if raw == "distinguished":
        setups = [
            Setup(s.context_kind, s.model, use_keywords=keywords) for s in DISTINGUISHED_SETUPS
        ]
        return setups, list(GRANULARITIES)
    if raw == "all":
        return list(ALL_SETUPS), list(GRANULARITIES)
    parts = raw.split("-")
    if len(parts) != 3:
        raise _UsageError(
            f"--setup must be 'distinguished', 'all', or context-model-granularity, got {raw!r}"
        )
    context_kind, model, granularity = parts
    return (
        [Setup(context_kind=context_kind, model=model, use_keywords=keywords)],
        [normalize_granularity(granularity)],
    )


def _load_corpus(path: Path) -> Corpus:
    return Corpus.from_dir(path)


def cmd_ingest(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    started = _now()
    in_dir = _resolve_input(args.input)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = document_files(in_dir)
    if not files:
        raise _UsageError(f"no .json inputs under {in_dir}")
    written = []
    for f in files:
        doc = parse_document(f.read_bytes())
        out_path = out_dir / f"{doc.paper_id}.json"
        _write_json_atomic(out_path, document_to_dict(doc))
        written.append(str(out_path))
    _write_json_atomic(
        _manifest_path(out_dir),
        _manifest("ingest", args, cfg, [str(f) for f in files], written, started, 0),
    )
    print(f"ingested {len(written)} documents into {out_dir}")
    return 0


def cmd_index(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    started = _now()
    corpus = _load_corpus(_resolve_input(args.input))
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    wanted = (
        list(GRANULARITIES)
        if args.granularity == "both"
        else [normalize_granularity(args.granularity)]
    )
    outputs = []
    for granularity in wanted:
        units = [
            u
            for doc in sorted(corpus.docs.values(), key=lambda d: d.paper_id)
            for u in units_for_document(doc, granularity)
        ]
        index = build_index(units, granularity)
        path = out_dir / f"index_{granularity}.json"
        save_index(index, path)
        outputs.append(str(path))
        print(f"{granularity}: {index.doc_count} units, avg length {index.avg_unit_length:.2f}")
    _write_json_atomic(
        _manifest_path(out_dir),
        _manifest("index", args, cfg, [args.input], outputs, started, 0),
    )
    return 0


def cmd_extract(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    started = _now()
    corpus = _load_corpus(_resolve_input(args.input))
    embed = embedding_fn(_embed_cfg(args, cfg))
    rows = []
    for doc in sorted(corpus.citing_documents(), key=lambda d: d.paper_id):
        for citance in extract_citances(doc):
            row = citance_to_dict(citance)
            row["contexts"] = {
                kind: context_to_dict(build_context(doc, citance, kind, embed))
                for kind in ("citance", "neighbors", "similar")
            }
            rows.append(row)
    out = Path(args.output)
    _write_jsonl_atomic(out, rows)
    _write_json_atomic(
        _manifest_path(out),
        _manifest("extract", args, cfg, [args.input], [str(out)], started, 0),
    )
    print(f"extracted {len(rows)} citances to {out}")
    return 0


def cmd_retrieve(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    started = _now()
    corpus = _load_corpus(_resolve_input(args.input))
    embed = embedding_fn(_embed_cfg(args, cfg))
    setups, granularities = _parse_setups(args)
    if args.granularity:
        granularities = [normalize_granularity(args.granularity)]
    outputs, unavailable = run_pipeline(
        corpus,
        embed,
        setups=setups,
        granularities=granularities,
        gen_endpoint=MOCK_TAG,
        gen_model="none",
        keyword_count=int(cfg.get("keyword_count", "5")),
        jobs=args.jobs,
    )
    rows = []
    for out in outputs:
        rows.append(
            {
                "citance_id": out.task.citance.citance_id,
                "target_paper_id": out.task.target_paper_id,
                "setup": out.setup.descriptor,
                "granularity": out.granularity,
                "hits": [
                    {"unit_id": uid, "score": score, "text": text}
                    for (uid, score), text in zip(
                        out.retrieval.hits.hits, out.retrieval.retrieved_texts
                    )
                ],
            }
        )
    out_path = Path(args.output)
    _write_jsonl_atomic(out_path, rows)
    for citance, ref in unavailable:
        print(f"skipped {citance.citance_id} -> {ref}: no cited full text", file=sys.stderr)
    _write_json_atomic(
        _manifest_path(out_path),
        _manifest("retrieve", args, cfg, [args.input], [str(out_path)], started, 0),
    )
    print(f"wrote {len(rows)} retrieval results to {out_path}")
    return 0


def cmd_summarize(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    started = _now()
    corpus = _load_corpus(_resolve_input(args.input))
    embed = embedding_fn(_embed_cfg(args, cfg))
    gen_endpoint, gen_model = _gen_endpoint(args, cfg)
    setups, granularities = _parse_setups(args)
    outputs, unavailable = run_pipeline(
        corpus,
        embed,
        setups=setups,
        granularities=granularities,
        gen_endpoint=gen_endpoint,
        gen_model=gen_model,
        template=args.template,
        keyword_count=int(cfg.get("keyword_count", "5")),
        jobs=args.jobs,
    )
    rows = []
    for out in outputs:
        row = summary_to_dict(out.summary)
        row["cache_key"] = out.cache_key
        row["hits"] = [[uid, score] for uid, score in out.retrieval.hits.hits]
        rows.append(row)
    out_path = Path(args.output)
    _write_jsonl_atomic(out_path, rows)
    for citance, ref in unavailable:
        print(f"skipped {citance.citance_id} -> {ref}: no cited full text", file=sys.stderr)
    _write_json_atomic(
        _manifest_path(out_path),
        _manifest("summarize", args, cfg, [args.input], [str(out_path)], started, 0),
    )
    print(f"wrote {len(rows)} summaries to {out_path}")
    return 0


def cmd_eval(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    started = _now()
    judgments_by_setup: dict[str, list[list[int]]] = {}
    inputs = []
    if args.results and args.judgments:
        inputs += [args.results, args.judgments]
        graded: dict[str, dict[str, int]] = {}
        for row in read_judgments_tsv(args.judgments):
            graded.setdefault(row.query_id, {})[row.unit_id] = row.grade
        for line in Path(args.results).read_text("utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            setup = f"{row['setup']}-{row['granularity']}"
            ranked_ids = [hit["unit_id"] for hit in row["hits"]]
            judgments_by_setup.setdefault(setup, []).append(
                graded_ranking(ranked_ids, graded.get(row["citance_id"], {}))
            )
    ratings = None
    if args.ratings:
        inputs.append(args.ratings)
        ratings = read_ratings_tsv(args.ratings)
    rouge_inputs: dict[str, list[tuple[str, str]]] = {}
    if args.rouge:
        inputs.append(args.rouge)
        for line in Path(args.rouge).read_text("utf-8").splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            rouge_inputs.setdefault(row["model"], []).append((row["candidate"], row["reference"]))
    report = aggregate_report(
        judgments=judgments_by_setup or None,
        ratings=ratings,
        rouge_inputs=rouge_inputs or None,
        expected_reference_count=args.expected_references,
        kappa_weighting=cfg.get("kappa_weighting", "linear"),
    )
    out_path = Path(args.output)
    _write_json_atomic(out_path, report.to_dict())
    _write_json_atomic(
        _manifest_path(out_path),
        _manifest("eval", args, cfg, inputs, [str(out_path)], started, 0),
    )
    print(f"wrote evaluation report to {out_path}")
    return 0


def cmd_stats(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    in_dir = _resolve_input(args.input)
    files = document_files(in_dir)
    if not files:
        raise _UsageError(f"no .json inputs under {in_dir}")
    docs = [load_document(f.read_bytes()) for f in files]
    stats = compute_corpus_stats(docs)
    payload = {
        "paper_count": stats.paper_count,
        "citance_count": stats.citance_count,
        "mean_citances_per_paper": stats.mean_citances_per_paper,
        "mean_citance_tokens": stats.mean_citance_tokens,
        "median_citance_tokens": stats.median_citance_tokens,
    }
    print(json.dumps(payload, sort_keys=True, indent=2))
    if args.output:
        started = _now()
        out_path = Path(args.output)
        _write_json_atomic(out_path, payload)
        _write_json_atomic(
            _manifest_path(out_path),
            _manifest("stats", args, cfg, [str(f) for f in files], [str(out_path)], started, 0),
        )
    return 0


def cmd_serve(args: argparse.Namespace, cfg: dict[str, str]) -> int:
    import uvicorn

    from .service import ServiceState, SummaryCache, create_app

    corpus = _load_corpus(_resolve_input(args.input))
    gen_endpoint, gen_model = _gen_endpoint(args, cfg)
    state = ServiceState(
        corpus,
        embed_cfg=_embed_cfg(args, cfg),
        gen_endpoint=gen_endpoint,
        gen_model=gen_model,
        cache=SummaryCache(args.cache) if args.cache else SummaryCache(),
        keyword_count=int(cfg.get("keyword_count", "5")),
    )
    app = create_app(state, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="ccsum", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p: _Parser, output: bool = True) -> None:
        p.add_argument("--input", required=True, help=f"input path or '{BUNDLED_INPUT}'")
        if output:
            p.add_argument("--output", required=True)
        p.add_argument("--config", default=None)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--provider", choices=PROVIDER_CHOICES, default="mock")

    p = sub.add_parser("ingest", help="parse and normalize raw paper files")
    common(p)
    p = sub.add_parser("index", help="build inverted indexes over a corpus")
    common(p)
    p.add_argument("--granularity", choices=("sentences", "paragraphs", "both"), default="both")
    p = sub.add_parser("extract", help="export citances with all three contexts")
    common(p)
    p = sub.add_parser("retrieve", help="run retrieval for every citance task")
    common(p)
    p.add_argument("--setup", default="distinguished")
    p.add_argument("--keywords", choices=("on", "off"), default="off")
    p.add_argument(
        "--granularity",
        choices=("sentences", "paragraphs"),
        default=None,
        help="restrict an explicit or default setup to one granularity",
    )
    p = sub.add_parser("summarize", help="retrieve and generate contextualized summaries")
    common(p)
    p.add_argument("--setup", default="distinguished")
    p.add_argument("--keywords", choices=("on", "off"), default="off")
    p.add_argument("--template", default=None)
    p = sub.add_parser("eval", help="aggregate metrics into a report")
    p.add_argument("--results", default=None, help="retrieval results JSONL")
    p.add_argument("--judgments", default=None, help="relevance judgments TSV")
    p.add_argument("--ratings", default=None, help="quality ratings TSV")
    p.add_argument("--rouge", default=None, help="candidate/reference pairs JSONL")
    p.add_argument("--expected-references", type=int, default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--config", default=None)
    p = sub.add_parser("stats", help="corpus statistics over citances")
    p.add_argument("--input", required=True, help=f"input path or '{BUNDLED_INPUT}'")
    p.add_argument("--output", default=None)
    p.add_argument("--config", default=None)
    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--input", required=True, help=f"input path or '{BUNDLED_INPUT}'")
    p.add_argument("--config", default=None)
    p.add_argument("--provider", choices=PROVIDER_CHOICES, default="mock")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--cache", default=None, help="summary cache JSONL path")
    p.add_argument("--static", default=None, help="directory with the reader frontend build")
    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "index": cmd_index,
    "extract": cmd_extract,
    "retrieve": cmd_retrieve,
    "summarize": cmd_summarize,
    "eval": cmd_eval,
    "stats": cmd_stats,
    "serve": cmd_serve,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise _UsageError("a subcommand is required")
        cfg = load_config(getattr(args, "config", None))
        handler = _COMMANDS[args.command]
        return handler(args, cfg)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return _VALIDATION_ERRORS
    except (EmbeddingUnavailable, ProviderTimeout, ProviderRejected, StorageFailure) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return _PROVIDER_ERRORS
    except CcsumError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _VALIDATION_ERRORS
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return _PROVIDER_ERRORS


if __name__ == "__main__":
    sys.exit(main())
