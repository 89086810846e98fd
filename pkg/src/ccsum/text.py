"""Shared tokenizer and rule-based sentence splitter.

Every component that counts or matches tokens (corpus statistics, BM25,
ROUGE, the fallback embedder) goes through :func:`tokenize` so their
numbers are comparable. The splitter is offset-preserving: it returns
character spans into the original string, so paragraph text can always be
reconstructed byte-exactly from its sentences plus the gaps between them.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

TOKENIZER_VERSION = "tok-v1"
ABBREVIATIONS_VERSION = "abbrev-v1"

# Unicode alphanumeric runs, lowercased; underscores and punctuation are
# discarded. Citation parentheticals are not stripped, their inner words
# simply become ordinary tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_TERMINALS = ".!?"
_PAIRS = {"(": ")", "[": "]", "{": "}"}
# Closing quotes/brackets that may trail the terminal punctuation and still
# belong to the sentence: he said "stop." Next ...
_TRAILERS = "\"')]}”’"

# A single capital letter forming its own token, as in "J. Smith" or "U.S.".
_INITIAL_RE = re.compile(r"(?:^|\W)([A-Z])\.$")


def tokenize(text: str) -> list[str]:
    """Lowercased Unicode word tokens of ``text``, punctuation discarded."""
    return _TOKEN_RE.findall(text.lower())


def _read_resource_lines(name: str) -> list[str]:
    raw = resources.files("ccsum.resources").joinpath(name).read_text("utf-8")
    return [ln.strip() for ln in raw.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=1)
def abbreviations() -> frozenset[str]:
    """Lowercased abbreviation entries (each ending with a period)."""
    return frozenset(ln.lower() for ln in _read_resource_lines("abbreviations.txt"))


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    return frozenset(_read_resource_lines("stopwords.txt"))


def _ends_with_abbreviation(prefix: str) -> bool:
    """True when ``prefix`` (ending in '.') terminates in a protected token."""
    low = prefix.lower()
    for abbr in abbreviations():
        if not low.endswith(abbr):
            continue
        cut = len(prefix) - len(abbr)
        if cut == 0 or not (prefix[cut - 1].isalnum() or prefix[cut - 1] == "."):
            return True
    return bool(_INITIAL_RE.search(prefix))


def _matched_brackets(text: str) -> set[int]:
    """Positions of brackets that participate in a balanced pair.

    Stray openers or closers (emoticons, lone citations split across
    fields) are ignored by the splitter rather than poisoning its depth
    tracking for the rest of the paragraph.
    """
    matched: set[int] = set()
    stack: list[tuple[str, int]] = []
    for i, ch in enumerate(text):
        if ch in _PAIRS:
            stack.append((ch, i))
        elif ch in ")]}":
            if stack and _PAIRS[stack[-1][0]] == ch:
                matched.add(stack.pop()[1])
                matched.add(i)
    return matched


def segment_spans(text: str) -> list[tuple[int, int]]:
    """Sentence spans ``(char_start, char_end)`` into ``text``.

    A boundary is a run of ``.!?`` (plus any directly trailing closing
    quotes or brackets) followed by whitespace or end of text, provided the
    run sits outside every balanced bracket pair and a lone period does not
    close a listed abbreviation or a single capital initial. Spans exclude
    surrounding whitespace; they are ascending and non-overlapping.
    """
    spans: list[tuple[int, int]] = []
    brackets = _matched_brackets(text)
    n = len(text)
    depth = 0
    start: int | None = None
    i = 0
    while i < n:
        ch = text[i]
        if start is None and not ch.isspace():
            start = i
        if i in brackets:
            depth += 1 if ch in _PAIRS else -1
        elif ch in _TERMINALS and start is not None:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINALS:
                j += 1
            if depth > 0:
                i = j + 1
                continue
            end = j
            # Bracket trailers here are necessarily unmatched (a matched
            # closer would imply depth > 0), so depth stays untouched.
            while end + 1 < n and text[end + 1] in _TRAILERS:
                end += 1
            abbrev = (
                text[i] == "."
                and j == i  # runs like "?!" or "..." are never abbreviations
                and _ends_with_abbreviation(text[start : i + 1])
            )
            if not abbrev and (end + 1 >= n or text[end + 1].isspace()):
                spans.append((start, end + 1))
                start = None
            i = end + 1
            continue
        i += 1
    if start is not None:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append((start, end))
    return spans
