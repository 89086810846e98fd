"""Prompt construction and generation-provider calls for contextualized
summaries.

Two default templates cover the two granularities: retrieved sentences are
paraphrased, retrieved paragraphs are summarized in at most five sentences.
Alternative instruction presets are registered under their own names. All
templates render through the same three-block instruction/input/output
frame, which proved the only reliable one across the assistant models this
pipeline targets.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime, timezone

import requests

from .errors import (
    EmptyInput,
    MalformedInput,
    ProviderRejected,
    ProviderTimeout,
)
from .text import segment_spans

MOCK_TAG = "mock"
# Fixed provenance timestamp for the mock provider so repeated offline runs
# are byte-identical.
MOCK_TIMESTAMP = "1970-01-01T00:00:00Z"
DEFAULT_GEN_API_KEY_ENV = "CCSUM_GEN_API_KEY"
DEFAULT_MAX_OUTPUT_TOKENS = 512

_PERSONA_PARAPHRASE = (
    "A chat between a curious human and an artificial intelligence assistant. "
    "The assistant knows how to paraphrase scientific text and the user will "
    "provide the scientific text for the assistant to paraphrase."
)
_PERSONA_SUMMARIZE = (
    "A chat between a curious human and an artificial intelligence assistant. "
    "The assistant knows how to summarize scientific text and the user will "
    "provide the scientific text for the assistant to summarize."
)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    instruction: str
    input_frame: str  # must contain the literal placeholder {input}
    output_marker: str = "### Output:"

    def render(self, input_text: str) -> str:
        if not input_text or not input_text.strip():
            raise EmptyInput("prompt input must be non-empty")
        framed = self.input_frame.replace("{input}", input_text)
        return (
            f"### Instruction:\n{self.instruction}\n\n"
            f"### Input:\n{framed}\n\n"
            f"{self.output_marker}\n"
        )


def _template(name: str, instruction: str, frame: str) -> tuple[str, PromptTemplate]:
    return name, PromptTemplate(name=name, instruction=instruction, input_frame=frame)


# The two defaults are the selected prompts; the remaining presets are the
# alternative imperatives that were tried for each task, plus the quoted
# input variant of the summarization frame.
PROMPT_TEMPLATES: dict[str, PromptTemplate] = dict(
    [
        _template(
            "paraphrase",
            _PERSONA_PARAPHRASE,
            "Generate a coherent paraphrased text for the following scientific text: {input}.",
        ),
        _template(
            "summarize",
            _PERSONA_SUMMARIZE,
            "Generate a coherent summary for the following scientific text in not more than 5 sentences: {input}.",
        ),
        _template(
            "summarize-short",
            _PERSONA_SUMMARIZE,
            "Generate a short summary of the following scientific text. The summary should not be more than 5 sentences long: {input}.",
        ),
        _template(
            "summarize-plain",
            _PERSONA_SUMMARIZE,
            "Summarize the following scientific text in not more than 5 sentences: {input}.",
        ),
        _template(
            "summarize-quoted",
            _PERSONA_SUMMARIZE,
            'Generate a coherent summary for the following scientific text in not more than 5 sentences: "{input}"',
        ),
        _template(
            "paraphrase-plain",
            _PERSONA_PARAPHRASE,
            "Generate a paraphrased text for the following scientific text: {input}.",
        ),
        _template(
            "paraphrase-imperative",
            _PERSONA_PARAPHRASE,
            "Paraphrase the following scientific text: {input}.",
        ),
        _template(
            "paraphrase-combine",
            _PERSONA_PARAPHRASE,
            "Combine the following scientific text into a coherent and concise text: {input}.",
        ),
    ]
)

# Task name per granularity: sentences are paraphrased, paragraphs summarized.
DEFAULT_TEMPLATE_FOR_GRANULARITY = {"sentence": "paraphrase", "paragraph": "summarize"}


def build_prompt(task: str, input_text: str) -> str:
    """Render the named template with {input} substituted verbatim."""
    template = PROMPT_TEMPLATES.get(task)
    if template is None:
        raise MalformedInput(f"unknown prompt template: {task!r}")
    return template.render(input_text)


def assemble_input(retrieved_texts: list[str] | tuple[str, ...], granularity: str) -> str:
    """Join retrieved units in rank order: sentences with spaces, paragraphs
    with a blank line."""
    sep = " " if granularity == "sentence" else "\n\n"
    return sep.join(retrieved_texts)


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    model_name: str
    temperature: float = 0.0
    max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS
    endpoint: str = MOCK_TAG
    timeout: float = 60.0

    def __post_init__(self) -> None:
        if not self.prompt:
            raise EmptyInput("generation prompt must be non-empty")
        if self.temperature < 0:
            raise MalformedInput("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise MalformedInput("max_output_tokens must be positive")


@dataclass(frozen=True)
class GenerationResult:
    text: str
    model_name: str
    temperature: float
    created_at: str


@dataclass(frozen=True)
class Summary:
    citance_id: str
    target_paper_id: str
    context_kind: str
    model: str
    granularity: str
    use_keywords: bool
    template: str
    text: str
    source_texts: tuple[str, ...]
    generator: str
    created_at: str

    def __post_init__(self) -> None:
        if not self.text:
            raise MalformedInput("summary text must be non-empty")


def _mock_completion(prompt: str) -> str:
    """Deterministic echo: return the input block of the rendered prompt."""
    head = "### Input:\n"
    tail = "\n\n### Output:"
    start = prompt.find(head)
    end = prompt.rfind(tail)
    if start != -1 and end != -1 and start + len(head) <= end:
        return prompt[start + len(head) : end]
    return prompt.strip()


def _remote_completion(req: GenerationRequest, api_key_env: str) -> str:
    headers = {}
    key = os.environ.get(api_key_env, "")
    if key:
        headers["Authorization"] = f"Bearer {key}"
    try:
        resp = requests.post(
            req.endpoint,
            json={
                "model": req.model_name,
                "prompt": req.prompt,
                "temperature": req.temperature,
                "max_tokens": req.max_output_tokens,
            },
            headers=headers,
            timeout=req.timeout,
        )
    except (requests.Timeout, requests.ConnectionError) as exc:
        raise ProviderTimeout(f"generation provider unreachable: {exc}") from exc
    except requests.RequestException as exc:
        raise ProviderRejected(f"generation request failed: {exc}") from exc
    if resp.status_code != 200:
        raise ProviderRejected(
            f"generation provider returned HTTP {resp.status_code}: {resp.text[:200]}"
        )
    try:
        text = resp.json()["text"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ProviderRejected(f"generation response malformed: {exc}") from exc
    if not isinstance(text, str) or not text:
        raise ProviderRejected("generation provider returned empty text")
    return text


def generate_summary(
    req: GenerationRequest, api_key_env: str = DEFAULT_GEN_API_KEY_ENV
) -> GenerationResult:
    """Provider completion plus provenance metadata; mock is deterministic."""
    if req.endpoint == MOCK_TAG:
        text = _mock_completion(req.prompt)
        created = MOCK_TIMESTAMP
    else:
        text = _remote_completion(req, api_key_env)
        created = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return GenerationResult(
        text=text, model_name=req.model_name, temperature=req.temperature, created_at=created
    )


_BULLET_MARKERS = ("- ", "* ", "• ")


def _is_list_line(line: str) -> bool:
    stripped = line.lstrip()
    if stripped.startswith(_BULLET_MARKERS) or stripped in ("-", "*", "•"):
        return True
    head = stripped.split(" ", 1)[0]
    return head[:-1].isdigit() and head[-1:] in (".", ")") if head else False


@dataclass(frozen=True)
class ValidationReport:
    sentence_count: int
    over_length: bool
    list_format: bool

    @property
    def passed(self) -> bool:
        return not (self.over_length or self.list_format)


def validate_summary(text: str, max_sentences: int = 5) -> ValidationReport:
    """Sentence count via the shared splitter plus format checks.

    A summary is flagged as list-formatted when any line opens with a
    bullet or an enumeration marker such as "1.", the failure mode of
    weaker instructions.
    """
    count = len(segment_spans(text))
    listish = any(_is_list_line(line) for line in text.splitlines() if line.strip())
    return ValidationReport(
        sentence_count=count, over_length=count > max_sentences, list_format=listish
    )


def summary_to_dict(s: Summary) -> dict:
    return {
        "citance_id": s.citance_id,
        "target_paper_id": s.target_paper_id,
        "context_kind": s.context_kind,
        "model": s.model,
        "granularity": s.granularity,
        "use_keywords": s.use_keywords,
        "template": s.template,
        "text": s.text,
        "source_texts": list(s.source_texts),
        "generator": s.generator,
        "created_at": s.created_at,
    }


def summary_from_dict(data: dict) -> Summary:
    try:
        return Summary(
            citance_id=data["citance_id"],
            target_paper_id=data["target_paper_id"],
            context_kind=data["context_kind"],
            model=data["model"],
            granularity=data["granularity"],
            use_keywords=bool(data["use_keywords"]),
            template=data["template"],
            text=data["text"],
            source_texts=tuple(data["source_texts"]),
            generator=data["generator"],
            created_at=data["created_at"],
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInput(f"not a serialized summary: {exc}") from exc
