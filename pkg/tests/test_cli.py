"""Command-line behavior: exit codes, artifacts, manifests, determinism."""

import json

import pytest

from ccsum.cli import load_config, main


def read_jsonl(path):
    return [json.loads(line) for line in path.read_text("utf-8").splitlines() if line.strip()]


class TestUsageErrors:
    def test_no_subcommand(self, capsys):
        assert main([]) == 1
        err = capsys.readouterr().err
        assert "usage:" in err
        assert "subcommand" in err

    def test_unknown_subcommand(self, capsys):
        assert main(["transmogrify"]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_missing_required_flag(self, capsys):
        assert main(["ingest", "--input", "bundled"]) == 1
        assert "--output" in capsys.readouterr().err

    def test_malformed_setup(self, tmp_path, capsys):
        code = main(
            ["summarize", "--input", "bundled", "--output", str(tmp_path / "s.jsonl"),
             "--setup", "similar-bm25"]
        )
        assert code == 1
        assert "--setup" in capsys.readouterr().err

    def test_remote_provider_requires_endpoints(self, tmp_path, capsys):
        code = main(
            ["summarize", "--input", "bundled", "--output", str(tmp_path / "s.jsonl"),
             "--provider", "remote"]
        )
        assert code == 1
        assert "embed_endpoint" in capsys.readouterr().err

    def test_bad_config_line(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("not a pair\n", "utf-8")
        assert main(["stats", "--input", "bundled", "--config", str(cfg)]) == 1
        assert "key=value" in capsys.readouterr().err


class TestLoadConfig:
    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment\n\nseed = 7\nkeyword_count=3\n", "utf-8")
        assert load_config(path) == {"seed": "7", "keyword_count": "3"}

    def test_none_is_empty(self):
        assert load_config(None) == {}


class TestStats:
    def test_bundled_hand_counts(self, capsys):
        assert main(["stats", "--input", "bundled"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload == {
            "paper_count": 1,  # papers containing citances
            "citance_count": 4,
            "mean_citances_per_paper": 4.0,
            "mean_citance_tokens": 21.75,  # token counts 13, 28, 35, 11
            "median_citance_tokens": 20.5,
        }

    def test_output_file_and_manifest(self, tmp_path, capsys):
        out = tmp_path / "stats.json"
        assert main(["stats", "--input", "bundled", "--output", str(out)]) == 0
        capsys.readouterr()
        assert json.loads(out.read_text("utf-8"))["citance_count"] == 4
        manifest = json.loads((tmp_path / "stats.json.manifest.json").read_text("utf-8"))
        assert manifest["command"] == "stats"
        assert manifest["exit_code"] == 0
        assert str(out) in manifest["outputs"]

    def test_seed_recorded_from_config(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed=7\n", "utf-8")
        out = tmp_path / "stats.json"
        assert main(
            ["stats", "--input", "bundled", "--output", str(out), "--config", str(cfg)]
        ) == 0
        capsys.readouterr()
        manifest = json.loads((tmp_path / "stats.json.manifest.json").read_text("utf-8"))
        assert manifest["seed"] == 7
        assert manifest["config"] == {"seed": "7"}


class TestPipelineChain:
    def test_ingest_index_extract_retrieve_summarize(self, tmp_path, capsys):
        docs = tmp_path / "docs"
        idx = tmp_path / "idx"
        extracted = tmp_path / "citances.jsonl"
        retrieved = tmp_path / "retrieved.jsonl"
        summaries = tmp_path / "summaries.jsonl"

        assert main(["ingest", "--input", "bundled", "--output", str(docs)]) == 0
        assert sorted(p.name for p in docs.glob("*.json")) == [
            "manifest.json",
            "p1-skill.json",
            "p2-hcn.json",
            "p3-qa.json",
        ]

        assert main(["index", "--input", str(docs), "--output", str(idx)]) == 0
        assert (idx / "index_sentence.json").exists()
        assert (idx / "index_paragraph.json").exists()

        assert main(["extract", "--input", str(docs), "--output", str(extracted)]) == 0
        rows = read_jsonl(extracted)
        assert len(rows) == 4
        assert all(set(r["contexts"]) == {"citance", "neighbors", "similar"} for r in rows)

        assert main(["retrieve", "--input", str(docs), "--output", str(retrieved)]) == 0
        captured = capsys.readouterr()
        assert "skipped p1-skill:p0005:0 -> BIBREF4" in captured.err
        hits_rows = read_jsonl(retrieved)
        assert len(hits_rows) == 16  # 4 tasks x 2 setups x 2 granularities
        for row in hits_rows:
            cap = 5 if row["granularity"] == "sentence" else 2
            assert 0 < len(row["hits"]) <= cap

        assert main(
            ["summarize", "--input", str(docs), "--output", str(summaries),
             "--provider", "mock"]
        ) == 0
        summary_rows = read_jsonl(summaries)
        assert len(summary_rows) == 16
        assert len({r["cache_key"] for r in summary_rows}) == 16
        assert all(r["created_at"] == "1970-01-01T00:00:00Z" for r in summary_rows)
        # every stage left a manifest beside its output
        assert (tmp_path / "retrieved.jsonl.manifest.json").exists()
        assert (tmp_path / "summaries.jsonl.manifest.json").exists()
        assert (idx / "manifest.json").exists()

    def test_reruns_are_byte_identical(self, tmp_path, capsys):
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        for out in (a, b):
            assert main(["summarize", "--input", "bundled", "--output", str(out)]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()

    def test_explicit_setup_triple(self, tmp_path, capsys):
        out = tmp_path / "s.jsonl"
        assert main(
            ["summarize", "--input", "bundled", "--output", str(out),
             "--setup", "similar-bm25-sentences"]
        ) == 0
        capsys.readouterr()
        rows = read_jsonl(out)
        assert len(rows) == 4  # 4 tasks x 1 setup x 1 granularity
        assert all(r["context_kind"] == "similar" and r["model"] == "bm25" for r in rows)
        assert all(r["granularity"] == "sentence" for r in rows)

    def test_keywords_flag(self, tmp_path, capsys):
        out = tmp_path / "kw.jsonl"
        assert main(
            ["summarize", "--input", "bundled", "--output", str(out),
             "--setup", "citance-dense-sentences", "--keywords", "on"]
        ) == 0
        capsys.readouterr()
        assert all(r["use_keywords"] for r in read_jsonl(out))

    def test_retrieve_granularity_restriction(self, tmp_path, capsys):
        out = tmp_path / "r.jsonl"
        assert main(
            ["retrieve", "--input", "bundled", "--output", str(out),
             "--granularity", "paragraphs"]
        ) == 0
        capsys.readouterr()
        rows = read_jsonl(out)
        assert rows and all(r["granularity"] == "paragraph" for r in rows)
        assert all(len(r["hits"]) <= 2 for r in rows)

    def test_setup_all_covers_grid(self, tmp_path, capsys):
        out = tmp_path / "all.jsonl"
        assert main(
            ["summarize", "--input", "bundled", "--output", str(out), "--setup", "all"]
        ) == 0
        capsys.readouterr()
        rows = read_jsonl(out)
        assert len(rows) == 96  # 4 tasks x 12 setups x 2 granularities
        assert len({(r["citance_id"], r["target_paper_id"], r["context_kind"], r["model"],
                     r["use_keywords"], r["granularity"]) for r in rows}) == 96

    def test_jobs_flag_matches_serial(self, tmp_path, capsys):
        serial, parallel = tmp_path / "serial.jsonl", tmp_path / "parallel.jsonl"
        assert main(["summarize", "--input", "bundled", "--output", str(serial)]) == 0
        assert main(
            ["summarize", "--input", "bundled", "--output", str(parallel), "--jobs", "4"]
        ) == 0
        capsys.readouterr()
        assert serial.read_bytes() == parallel.read_bytes()


class TestProviderFailures:
    def test_unreachable_remote_is_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "remote.cfg"
        # nothing listens on port 9; connection is refused immediately
        cfg.write_text(
            "embed_endpoint=http://127.0.0.1:9/embed\n"
            "gen_endpoint=http://127.0.0.1:9/complete\n"
            "embed_timeout=2\n",
            "utf-8",
        )
        code = main(
            ["summarize", "--input", "bundled", "--output", str(tmp_path / "s.jsonl"),
             "--provider", "remote", "--config", str(cfg)]
        )
        assert code == 2
        assert "provider error" in capsys.readouterr().err

    def test_unreadable_input_is_exit_2(self, tmp_path, capsys):
        code = main(
            ["stats", "--input", str(tmp_path / "absent-dir")]
        )
        assert code == 1  # empty/missing directory is a usage problem
        capsys.readouterr()


class TestEvalCommand:
    @pytest.fixture()
    def artifacts(self, tmp_path, capsys):
        retrieved = tmp_path / "retrieved.jsonl"
        summaries = tmp_path / "summaries.jsonl"
        assert main(["retrieve", "--input", "bundled", "--output", str(retrieved)]) == 0
        assert main(["summarize", "--input", "bundled", "--output", str(summaries)]) == 0
        capsys.readouterr()
        return retrieved, summaries

    def test_report_over_produced_artifacts(self, tmp_path, artifacts, capsys):
        retrieved, summaries = artifacts
        hits_rows = read_jsonl(retrieved)
        judgments = tmp_path / "judgments.tsv"
        lines = []
        for row in hits_rows:
            for rank, hit in enumerate(row["hits"]):
                grade = 2 if rank == 0 else 1
                lines.append(f"{row['citance_id']}\t{hit['unit_id']}\t{grade}")
        judgments.write_text("\n".join(sorted(set(lines))) + "\n", "utf-8")

        rouge = tmp_path / "rouge.jsonl"
        with rouge.open("w", encoding="utf-8") as fh:
            for row in read_jsonl(summaries):
                fh.write(json.dumps(
                    {"model": row["generator"], "candidate": row["text"],
                     "reference": row["text"]}
                ) + "\n")

        ratings = tmp_path / "ratings.tsv"
        ratings.write_text(
            "r1\ts1\tcoverage\t4\nr1\ts2\tcoverage\t2\n"
            "r2\ts1\tcoverage\t4\nr2\ts2\tcoverage\t2\n",
            "utf-8",
        )

        report_path = tmp_path / "report.json"
        code = main(
            ["eval", "--results", str(retrieved), "--judgments", str(judgments),
             "--rouge", str(rouge), "--ratings", str(ratings),
             "--expected-references", "16", "--output", str(report_path)]
        )
        assert code == 0
        capsys.readouterr()
        report = json.loads(report_path.read_text("utf-8"))
        assert report["bookkeeping"] == {
            "reference_count": 16,
            "expected_reference_count": 16,
            "ok": True,
        }
        # graded rankings put grade 2 first: every group scores a positive nDCG
        assert report["retrieval"]
        for group in report["retrieval"].values():
            assert 0.0 < group["mean_ndcg@5"] <= 1.0
        assert report["summarization"]["mock-echo"]["rouge1_f1"] == pytest.approx(1.0)
        assert report["quality"]["coverage"]["kappa"] == pytest.approx(1.0)

    def test_bookkeeping_mismatch_reported(self, tmp_path, artifacts, capsys):
        _, summaries = artifacts
        rouge = tmp_path / "rouge.jsonl"
        with rouge.open("w", encoding="utf-8") as fh:
            for row in read_jsonl(summaries)[:3]:
                fh.write(json.dumps(
                    {"model": row["generator"], "candidate": row["text"],
                     "reference": row["text"]}
                ) + "\n")
        report_path = tmp_path / "report.json"
        assert main(
            ["eval", "--rouge", str(rouge), "--expected-references", "16",
             "--output", str(report_path)]
        ) == 0
        capsys.readouterr()
        report = json.loads(report_path.read_text("utf-8"))
        assert report["bookkeeping"]["ok"] is False
