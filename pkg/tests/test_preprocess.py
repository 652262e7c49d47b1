"""Normalization and marker-insertion tests.

The segmentation expectations are checked against an independent
longest-match reference implemented here, not against the library code.
"""

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tweetevents.chunker import CandidateChunk
from tweetevents.corpus import Tweet
from tweetevents.errors import AlignmentError, ValidationError
from tweetevents.preprocess import (
    ENTITY_END,
    ENTITY_START,
    RegexTokenizer,
    insert_markers,
    normalize_sentence,
    parse_decontractions,
    _default_wordlist,
)


def greedy_reference(token, words):
    """Independent greedy longest-match segmentation.

    Walks the token left to right, always taking the longest dictionary
    word at the cursor; any stuck position means the token is left whole.
    """
    if token in words:
        return [token]
    parts, i = [], 0
    while i < len(token):
        match = None
        for j in range(len(token), i, -1):
            if token[i:j] in words:
                match = token[i:j]
                break
        if match is None:
            return [token]
        parts.append(match)
        i += len(match)
    return parts if len(parts) > 1 else [token]


class TestNormalize:
    def test_hashtag_segmentation(self):
        assert normalize_sentence("#StayHome") == "stay home"

    def test_segmentation_matches_reference(self):
        words = _default_wordlist()
        for token in ["stayhome", "icantest", "testedpositive", "quarantinelife",
                      "stayhomestaysafe", "xyzzyhome", "covidtest", "washyourhands"]:
            got = normalize_sentence("#" + token)
            assert got == " ".join(greedy_reference(token, words))

    def test_contraction_url_punct(self):
        assert normalize_sentence("Can't test!! http://t.co/x") == "can not test"

    def test_url_and_email_removed(self):
        out = normalize_sentence("see www.example.com/page or mail a@b.co now")
        assert out == "see or mail now"

    def test_emoji_removed(self):
        assert normalize_sentence("sick \U0001F637\U0001F912 today") == "sick today"

    def test_suffix_contractions(self):
        out = normalize_sentence("she doesn't know, they're fine, I'll wait")
        assert out == "she does not know they are fine i will wait"

    def test_curly_apostrophe(self):
        assert normalize_sentence("I’m fine") == "i am fine"

    def test_markers_never_survive(self):
        out = normalize_sentence(f"{ENTITY_START}John{ENTITY_END} tested")
        assert ENTITY_START not in out and ENTITY_END not in out
        assert out == "john tested"

    def test_possessive_s_untouched(self):
        # 's is ambiguous (is/has/possessive) so there is no rule for it;
        # the apostrophe is stripped with the rest of the punctuation.
        assert normalize_sentence("John's test") == "john s test"

    def test_underscore_splits(self):
        assert normalize_sentence("stay_home now") == "stay home now"

    def test_unsegmentable_token_left_whole(self):
        assert normalize_sentence("#qqqqzz") == "qqqqzz"

    def test_empty_output_allowed(self):
        assert normalize_sentence("!!! ???") == ""
        assert normalize_sentence("") == ""

    def test_case_fold_residue(self):
        # Turkish dotted capital I lowercases to "i" plus a combining dot.
        out = normalize_sentence("İstanbul")
        assert out == "istanbul"
        assert all(ord(c) < 128 for c in out)

    def test_custom_tables(self):
        table = parse_decontractions("foo't => foo not")
        out = normalize_sentence("foo't bar", decontractions=table,
                                 wordlist=frozenset({"bar"}))
        assert out == "foo not bar"

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, text):
        once = normalize_sentence(text)
        assert normalize_sentence(once) == once

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_output_charset(self, text):
        out = normalize_sentence(text)
        assert out == out.lower()
        assert not re.search(r"\s\s", out)
        assert out == out.strip()


class TestTokenizer:
    def test_offsets_cover_text(self):
        text = "John tested negative, sadly."
        for span in RegexTokenizer().tokenize_with_offsets(text):
            assert text[span.start:span.end] == span.text

    def test_markers_atomic(self):
        toks = RegexTokenizer().tokenize(f"a {ENTITY_START}b{ENTITY_END} c")
        assert toks == ["a", ENTITY_START, "b", ENTITY_END, "c"]

    def test_apostrophe_words(self):
        assert RegexTokenizer().tokenize("can't stop") == ["can't", "stop"]

    def test_punct_isolated(self):
        assert RegexTokenizer().tokenize("no!!") == ["no", "!", "!"]


class TestInsertMarkers:
    def test_basic(self):
        t = Tweet("1", "John tested negative in Seattle")
        ms = insert_markers(t, CandidateChunk(0, 4, "John"))
        assert ms.tokens[ms.p] == ENTITY_START
        assert ms.tokens[ms.q] == ENTITY_END
        assert ms.tokens[ms.p + 1:ms.q] == ("John",)
        assert not ms.skipped

    def test_removal_restores_tokens(self):
        t = Tweet("1", "John tested negative in Seattle")
        base = tuple(RegexTokenizer().tokenize(t.text))
        ms = insert_markers(t, CandidateChunk(12, 20, "negative"))
        assert ms.without_markers() == base

    def test_mid_token_boundary_realigns(self):
        t = Tweet("1", "John tested negative")
        ms = insert_markers(t, CandidateChunk(2, 4, "hn"))
        assert ms.tokens[ms.p + 1:ms.q] == ("John",)

    def test_multiword_chunk(self):
        t = Tweet("1", "my old uncle tested positive")
        ms = insert_markers(t, CandidateChunk(3, 12, "old uncle"))
        assert ms.tokens[ms.p + 1:ms.q] == ("old", "uncle")

    def test_skip_when_end_marker_cut(self):
        text = " ".join(f"w{i}" for i in range(200))
        start = text.index("w190")
        chunk = CandidateChunk(start, start + 4, "w190")
        ms = insert_markers(Tweet("1", text), chunk, max_length=128)
        assert ms.skipped
        assert ms.q >= 128

    def test_truncates_tail_not_markers(self):
        text = " ".join(f"w{i}" for i in range(200))
        chunk = CandidateChunk(0, 2, "w0")
        ms = insert_markers(Tweet("1", text), chunk, max_length=128)
        assert not ms.skipped
        assert len(ms.tokens) == 128
        assert ms.tokens[0] == ENTITY_START and ms.tokens[2] == ENTITY_END

    def test_bad_chunk_raises(self):
        t = Tweet("1", "short text")
        with pytest.raises(ValidationError):
            insert_markers(t, CandidateChunk(0, 99, "short text plus"))

    def test_whitespace_only_chunk_raises(self):
        t = Tweet("1", "a  b")
        with pytest.raises(AlignmentError):
            insert_markers(t, CandidateChunk(1, 2, " "))

    @given(st.data())
    @settings(max_examples=200, deadline=None)
    def test_marker_round_trip(self, data):
        words = data.draw(st.lists(
            st.text(alphabet="abcdefg", min_size=1, max_size=6), min_size=1, max_size=30))
        text = " ".join(words)
        spans = RegexTokenizer().tokenize_with_offsets(text)
        i = data.draw(st.integers(0, len(spans) - 1))
        j = data.draw(st.integers(i, len(spans) - 1))
        chunk = CandidateChunk(spans[i].start, spans[j].end,
                               text[spans[i].start:spans[j].end])
        ms = insert_markers(Tweet("t", text), chunk, max_length=512)
        assert ms.without_markers() == tuple(s.text for s in spans)
        assert ms.tokens[ms.p + 1:ms.q] == tuple(s.text for s in spans[i:j + 1])
