"""Tokenizer and sentence segmentation."""

import string

from hypothesis import given, settings
from hypothesis import strategies as st

from ccsum.text import segment_spans, tokenize


class TestTokenize:
    def test_lowercases_and_splits_on_punctuation(self):
        assert tokenize("The CAT sat, on (the) mat!") == [
            "the", "cat", "sat", "on", "the", "mat",
        ]

    def test_keeps_digits_and_mixed_tokens(self):
        assert tokenize("BM25 with k1=1.0") == ["bm25", "with", "k1", "1", "0"]

    def test_underscore_is_a_separator(self):
        assert tokenize("foo_bar") == ["foo", "bar"]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("  ...  ") == []

    def test_unicode_words_survive(self):
        assert tokenize("Kočiský über naïve") == ["kočiský", "über", "naïve"]


def sentences(text):
    return [text[a:b] for a, b in segment_spans(text)]


class TestSegmentSpans:
    def test_two_plain_declaratives(self):
        assert sentences("First sentence. Second sentence.") == [
            "First sentence.",
            "Second sentence.",
        ]

    def test_split_after_citation_parenthetical(self):
        text = "It is described in (Williams et al., 2017). Next point."
        assert sentences(text) == [
            "It is described in (Williams et al., 2017).",
            "Next point.",
        ]

    def test_no_split_inside_parentheses(self):
        text = "He said (really!) that it works."
        assert sentences(text) == [text]

    def test_abbreviations_do_not_split(self):
        text = "See Fig. 3 and cf. the appendix, e.g. the proof."
        assert sentences(text) == [text]

    def test_et_al_does_not_split(self):
        text = "Following Mintz et al. we use distant supervision. It works."
        assert sentences(text) == [
            "Following Mintz et al. we use distant supervision.",
            "It works.",
        ]

    def test_single_capital_initial_does_not_split(self):
        text = "The model of J. Smith performs well. It is fast."
        assert sentences(text) == [
            "The model of J. Smith performs well.",
            "It is fast.",
        ]

    def test_question_and_exclamation(self):
        assert sentences("Is it fast? Yes! Truly.") == ["Is it fast?", "Yes!", "Truly."]

    def test_trailing_quote_belongs_to_sentence(self):
        text = 'They call it "hybrid." The name stuck.'
        assert sentences(text) == ['They call it "hybrid."', "The name stuck."]

    def test_empty_text(self):
        assert segment_spans("") == []
        assert segment_spans("   ") == []

    def test_unmatched_bracket_does_not_suppress_boundaries(self):
        text = "An open ( bracket here. A second sentence."
        assert sentences(text) == ["An open ( bracket here.", "A second sentence."]

    def test_decimal_numbers_do_not_split(self):
        text = "We use 1.2 million articles. Accuracy is 67.6% overall."
        assert sentences(text) == [
            "We use 1.2 million articles.",
            "Accuracy is 67.6% overall.",
        ]

    def test_offsets_slice_back_to_text(self):
        text = "Alpha beta. Gamma delta! Epsilon?"
        for a, b in segment_spans(text):
            assert 0 <= a < b <= len(text)
            assert text[a:b].strip() == text[a:b]

    @given(st.text(alphabet=string.ascii_letters + " .!?()\"'", max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_spans_are_sorted_disjoint_and_cover_all_words(self, text):
        spans = segment_spans(text)
        prev_end = 0
        for a, b in spans:
            assert a >= prev_end
            assert a < b
            prev_end = b
        # every non-space character falls inside some span
        covered = set()
        for a, b in spans:
            covered.update(range(a, b))
        for i, ch in enumerate(text):
            if not ch.isspace():
                assert i in covered
