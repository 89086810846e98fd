"""Evaluation metrics and report aggregation.

Pure-function metrics: nDCG@k over graded relevance, ROUGE-1/2/L over the
shared tokenizer, Cohen's weighted kappa over paired ratings. Prompted
evaluation (judge-style scoring of summaries on coverage, focus, and
relevance) is emit-and-parse only here; issuing the request goes through
the generation provider client.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DegenerateMarginals,
    LengthMismatch,
    MalformedInput,
    MalformedResponse,
    MissingCriterion,
    ScoreOutOfRange,
    UnknownCriterion,
)
from .text import tokenize

GRADES = (0, 1, 2)  # non-relevant, somewhat relevant, relevant
RATING_SCALE = (1, 5)

CRITERIA = ("coverage", "focus", "relevance")


@dataclass(frozen=True)
class RelevanceJudgment:
    query_id: str
    unit_id: str
    grade: int

    def __post_init__(self) -> None:
        if self.grade not in GRADES:
            raise ScoreOutOfRange(f"grade must be in {GRADES}, got {self.grade}")


@dataclass(frozen=True)
class QualityRating:
    rater_id: str
    summary_id: str
    criterion: str
    score: int

    def __post_init__(self) -> None:
        if self.criterion not in CRITERIA:
            raise UnknownCriterion(f"unknown criterion: {self.criterion!r}")
        if not (RATING_SCALE[0] <= self.score <= RATING_SCALE[1]):
            raise ScoreOutOfRange(f"score must be in {RATING_SCALE}, got {self.score}")


def ndcg_at_k(ranked_grades: Sequence[int], k: int = 5) -> float:
    """Normalized DCG with linear gains; 0.0 when the ideal DCG is zero."""
    if k < 1:
        raise MalformedInput("k must be >= 1")
    for g in ranked_grades:
        if g < 0:
            raise MalformedInput("grades must be non-negative")

    def dcg(grades: Sequence[int]) -> float:
        return sum(g / math.log2(i + 2) for i, g in enumerate(grades[:k]))

    ideal = dcg(sorted(ranked_grades, reverse=True))
    if ideal == 0.0:
        return 0.0
    return dcg(ranked_grades) / ideal


@dataclass(frozen=True)
class OverlapScore:
    precision: float
    recall: float
    f1: float


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def rouge_n(candidate: str, reference: str, n: int) -> OverlapScore:
    """Clipped n-gram overlap; zero when either side has no n-grams."""
    if n < 1:
        raise MalformedInput("n must be >= 1")

    def ngrams(text: str) -> Counter:
        toks = tokenize(text)
        return Counter(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1))

    cand = ngrams(candidate)
    ref = ngrams(reference)
    total_c = sum(cand.values())
    total_r = sum(ref.values())
    if total_c == 0 or total_r == 0:
        return OverlapScore(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    precision = overlap / total_c
    recall = overlap / total_r
    return OverlapScore(precision, recall, _f1(precision, recall))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # Rolling single-row DP; quadratic time, linear space.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        cur = [0]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> OverlapScore:
    """Longest-common-subsequence overlap of the token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return OverlapScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return OverlapScore(precision, recall, _f1(precision, recall))


_CRITERION_DEFINITIONS = {
    "coverage": (
        "Coverage (1-5) - the amount of key information covered by the summary "
        "that is relevant to this citation. The summary should contain information "
        "from the cited paper that fits the context of the given citation text and "
        "helps you to better understand why this paper was cited here."
    ),
    "focus": (
        "Focus (1-5) - the collective quality of all sentences. The summary should "
        "be well-structured and well-organized. The summary should build from "
        "sentence to sentence to a coherent body of information that is relevant "
        "to the given citation text."
    ),
    "relevance": (
        "Relevance (1-5) - the relevance of the summary to the citation text. The "
        "summary should contain only information from the cited paper that fits "
        "the current reading context. It should be sufficiently informative so "
        "that you do not need to actually read the cited paper to understand why "
        "it was cited here."
    ),
}

_CRITERION_STEPS = {
    "coverage": (
        "Check if the summary contains only information that is relevant to the citation text.",
        "Assign a score for coverage on a scale of 1 to 5, where 1 is the lowest and 5 is "
        "the highest based on the Evaluation Criteria.",
    ),
    "focus": (
        "Check if the summary is coherent and contains well-organized information that is "
        "relevant to the citation text.",
        "Assign a score for focus on a scale of 1 to 5, where 1 is the lowest and 5 is the "
        "highest based on the Evaluation Criteria.",
    ),
    "relevance": (
        "Compare the content of the summary with the citation text. Assess whether the "
        "summary includes relevant information from the cited paper that directly relates "
        "to the context and purpose of the citation.",
        "Determine if the summary provides enough information for you to understand why "
        "the cited paper was referenced without needing to read the entire paper.",
        "Rate the relevance of the summary based on the above assessment using a scale of "
        "1 to 5, where 1 indicates low relevance and 5 indicates high relevance.",
    ),
}

_GENERIC_STEPS = (
    "Read the given citation text that references another paper and make note of its content.",
    "Read the summary provided of the cited paper.",
)


def criterion_definition(criterion: str) -> str:
    if criterion not in CRITERIA:
        raise UnknownCriterion(f"unknown criterion: {criterion!r}")
    return _CRITERION_DEFINITIONS[criterion]


def build_geval_prompt(criterion: str, citance_text: str, summary_text: str) -> str:
    """Single-criterion judge prompt; one prompt per criterion, never merged."""
    if criterion not in CRITERIA:
        raise UnknownCriterion(f"unknown criterion: {criterion!r}")
    steps = list(_GENERIC_STEPS) + list(_CRITERION_STEPS[criterion])
    numbered = "\n".join(f"{i}. {step}" for i, step in enumerate(steps, start=1))
    return (
        "You are a scientist who is currently reading a paper. While reading the "
        "paper, you see a citation to another paper that you want to follow. You "
        "are also given a summary of the corresponding cited paper. Your task is "
        f"to assess is to rate this summary on {criterion}.\n"
        "Please make sure you read and understand these instructions carefully. "
        "Please keep this document open while reviewing, and refer to it as needed.\n"
        "\n"
        "Evaluation Criteria:\n"
        "\n"
        f"{_CRITERION_DEFINITIONS[criterion]}\n"
        "\n"
        "Evaluation Steps (Corrected Chain of Thought):\n"
        "\n"
        f"{numbered}\n"
        "\n"
        "Example:\n"
        "\n"
        "Source Text:\n"
        f"{citance_text}\n"
        "\n"
        "Summary:\n"
        f"{summary_text}\n"
        "\n"
        "Evaluation Form (scores ONLY):\n"
        "\n"
        f"- {criterion.capitalize()}:\n"
    )


def render_geval_response(scores: Mapping[str, int]) -> str:
    """The well-formed response shape the evaluation form asks for."""
    lines = []
    for criterion in CRITERIA:
        if criterion in scores:
            lines.append(f"- {criterion.capitalize()}: {scores[criterion]}")
    return "\n".join(lines) + "\n"


_SCORE_LINE = re.compile(r"^\s*-\s*([A-Za-z]+)\s*:\s*(-?\d+)\s*$")


def parse_geval_scores(response: str, expected: Sequence[str]) -> dict[str, int]:
    """Parse "- Criterion: N" lines; every expected criterion must appear."""
    for criterion in expected:
        if criterion not in CRITERIA:
            raise UnknownCriterion(f"unknown criterion: {criterion!r}")
    found: dict[str, int] = {}
    for line in response.splitlines():
        match = _SCORE_LINE.match(line)
        if not match:
            continue
        name = match.group(1).lower()
        if name not in CRITERIA:
            continue
        score = int(match.group(2))
        if name in found and found[name] != score:
            raise MalformedResponse(f"conflicting scores for {name}")
        found[name] = score
    if not found:
        raise MalformedResponse("no score lines found in response")
    for name, score in found.items():
        if not (RATING_SCALE[0] <= score <= RATING_SCALE[1]):
            raise ScoreOutOfRange(f"{name} score {score} outside {RATING_SCALE}")
    missing = [c for c in expected if c not in found]
    if missing:
        raise MissingCriterion(f"response lacks scores for: {', '.join(missing)}")
    return {c: found[c] for c in expected}


def weighted_kappa(
    ratings_a: Sequence[int],
    ratings_b: Sequence[int],
    scale: tuple[int, int] = RATING_SCALE,
    weighting: str = "linear",
) -> float:
    """Cohen's weighted kappa: 1 - sum(w*O)/sum(w*E).

    Identical vectors score exactly 1.0. When the chance disagreement is
    zero but an actual disagreement exists the statistic is undefined.
    """
    if len(ratings_a) != len(ratings_b) or not ratings_a:
        raise LengthMismatch(
            f"rating vectors must have equal non-zero length "
            f"({len(ratings_a)} vs {len(ratings_b)})"
        )
    lo, hi = scale
    m = hi - lo + 1
    if m < 2:
        raise MalformedInput("scale must span at least two categories")
    if weighting not in ("linear", "quadratic"):
        raise MalformedInput(f"unknown weighting: {weighting!r}")
    for v in list(ratings_a) + list(ratings_b):
        if not (lo <= v <= hi):
            raise ScoreOutOfRange(f"rating {v} outside scale {scale}")

    total = len(ratings_a)
    observed = [[0.0] * m for _ in range(m)]
    for a, b in zip(ratings_a, ratings_b):
        observed[a - lo][b - lo] += 1.0 / total
    marg_a = [sum(row) for row in observed]
    marg_b = [sum(observed[i][j] for i in range(m)) for j in range(m)]

    def weight(i: int, j: int) -> float:
        d = abs(i - j) / (m - 1)
        return d * d if weighting == "quadratic" else d

    num = sum(weight(i, j) * observed[i][j] for i in range(m) for j in range(m))
    den = sum(weight(i, j) * marg_a[i] * marg_b[j] for i in range(m) for j in range(m))
    if num == 0.0:
        return 1.0
    if den == 0.0:
        # Cannot occur when both marginals come from the same table, since
        # observed disagreement implies positive chance disagreement; kept
        # as a guard against future marginal injection.
        raise DegenerateMarginals("chance disagreement is zero but ratings disagree")
    return 1.0 - num / den


def read_judgments_tsv(path: str | Path) -> list[RelevanceJudgment]:
    """Rows of query_id<TAB>unit_id<TAB>grade; no header."""
    out = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise MalformedInput(f"{path}:{lineno}: expected 3 tab-separated fields")
        try:
            grade = int(parts[2])
        except ValueError as exc:
            raise MalformedInput(f"{path}:{lineno}: grade must be an integer") from exc
        out.append(RelevanceJudgment(query_id=parts[0], unit_id=parts[1], grade=grade))
    return out


def read_ratings_tsv(path: str | Path) -> list[QualityRating]:
    """Rows of rater_id<TAB>summary_id<TAB>criterion<TAB>score; no header."""
    out = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise MalformedInput(f"{path}:{lineno}: expected 4 tab-separated fields")
        try:
            score = int(parts[3])
        except ValueError as exc:
            raise MalformedInput(f"{path}:{lineno}: score must be an integer") from exc
        out.append(
            QualityRating(rater_id=parts[0], summary_id=parts[1], criterion=parts[2], score=score)
        )
    return out


def graded_ranking(
    ranked_unit_ids: Sequence[str], judgments: Mapping[str, int]
) -> list[int]:
    """Grades of a ranking's units; unjudged units count as non-relevant."""
    return [judgments.get(uid, 0) for uid in ranked_unit_ids]


@dataclass
class EvalReport:
    retrieval: dict[str, dict] = field(default_factory=dict)
    summarization: dict[str, dict] = field(default_factory=dict)
    quality: dict[str, dict] = field(default_factory=dict)
    bookkeeping: dict = field(default_factory=dict)
    empty_groups: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "retrieval": self.retrieval,
            "summarization": self.summarization,
            "quality": self.quality,
            "bookkeeping": self.bookkeeping,
            "empty_groups": self.empty_groups,
        }


def aggregate_report(
    judgments: Mapping[str, Sequence[Sequence[int]]] | None = None,
    ratings: Iterable[QualityRating] | None = None,
    rouge_inputs: Mapping[str, Sequence[tuple[str, str]]] | None = None,
    expected_reference_count: int | None = None,
    kappa_weighting: str = "linear",
) -> EvalReport:
    """Group means per setup/model/criterion plus bookkeeping checks.

    judgments maps a setup descriptor to graded rankings (one per query);
    rouge_inputs maps a generator name to (candidate, reference) pairs.
    Empty groups are reported, not fatal.
    """
    report = EvalReport()

    for setup, rankings in sorted((judgments or {}).items()):
        if not rankings:
            report.empty_groups.append(f"retrieval:{setup}")
            continue
        values = [ndcg_at_k(r, 5) for r in rankings]
        report.retrieval[setup] = {
            "mean_ndcg@5": sum(values) / len(values),
            "queries": len(values),
            "judgment_rows": sum(len(r) for r in rankings),
        }

    reference_count = 0
    for model, pairs in sorted((rouge_inputs or {}).items()):
        if not pairs:
            report.empty_groups.append(f"summarization:{model}")
            continue
        reference_count += len(pairs)
        scores1 = [rouge_n(c, r, 1).f1 for c, r in pairs]
        scores2 = [rouge_n(c, r, 2).f1 for c, r in pairs]
        scores_l = [rouge_l(c, r).f1 for c, r in pairs]
        report.summarization[model] = {
            "rouge1_f1": sum(scores1) / len(scores1),
            "rouge2_f1": sum(scores2) / len(scores2),
            "rougeL_f1": sum(scores_l) / len(scores_l),
            "pairs": len(pairs),
        }

    by_criterion: dict[str, list[QualityRating]] = {}
    for rating in ratings or []:
        by_criterion.setdefault(rating.criterion, []).append(rating)
    for criterion in CRITERIA:
        rows = by_criterion.get(criterion, [])
        if not rows:
            continue
        per_rater: dict[str, dict[str, int]] = {}
        for r in rows:
            per_rater.setdefault(r.rater_id, {})[r.summary_id] = r.score
        raters = sorted(per_rater)
        kappas = []
        for i in range(len(raters)):
            for j in range(i + 1, len(raters)):
                shared = sorted(set(per_rater[raters[i]]) & set(per_rater[raters[j]]))
                if not shared:
                    continue
                kappas.append(
                    weighted_kappa(
                        [per_rater[raters[i]][s] for s in shared],
                        [per_rater[raters[j]][s] for s in shared],
                        weighting=kappa_weighting,
                    )
                )
        report.quality[criterion] = {
            "mean_score": sum(r.score for r in rows) / len(rows),
            "ratings": len(rows),
            "kappa": sum(kappas) / len(kappas) if kappas else None,
            "rater_pairs": len(kappas),
        }

    report.bookkeeping = {
        "reference_count": reference_count,
        "expected_reference_count": expected_reference_count,
        "ok": expected_reference_count is None or reference_count == expected_reference_count,
    }
    return report
