"""Text preparation for the two model families.

Slot-filling inputs keep the raw tweet text and get entity start/end
marker tokens around the candidate chunk (:func:`insert_markers`).
Sentence-classification inputs are normalized (:func:`normalize_sentence`):
URL, email and emoji removal, decontraction, punctuation stripping,
hashtag word segmentation, lowercasing — in that order. Decontraction runs
before punctuation stripping so the apostrophe signal is still available.

The decontraction table and the segmentation wordlist are plain data
files (``data/decontractions.txt``, ``data/wordlist.txt``) and can be
swapped out per call.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .chunker import CandidateChunk, validate_chunk
from .corpus import Tweet
from .errors import AlignmentError

ENTITY_START = "<E>"
ENTITY_END = "</E>"

_WORD = r"\w+(?:['’]\w+)*"
_TOKEN_RE = re.compile(
    f"{re.escape(ENTITY_START)}|{re.escape(ENTITY_END)}|{_WORD}|[^\\w\\s]"
)


@dataclass(frozen=True)
class TokenSpan:
    text: str
    start: int
    end: int


class RegexTokenizer:
    """Whitespace/punctuation tokenizer with character offsets.

    Marker tokens are matched atomically, words keep internal apostrophes,
    and every other non-space character becomes its own token.
    """

    def tokenize_with_offsets(self, text: str) -> list[TokenSpan]:
        return [TokenSpan(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]

    def tokenize(self, text: str) -> list[str]:
        return [t.text for t in self.tokenize_with_offsets(text)]


@dataclass(frozen=True)
class MarkedSequence:
    """Tokenized tweet with entity markers inserted around a candidate chunk.

    ``tokens[p]`` is the start marker and ``tokens[q]`` the end marker.
    ``skipped`` is set when the end marker would not survive truncation to
    ``max_length``; such sequences must not be fed to a model.
    """

    tokens: tuple[str, ...]
    p: int
    q: int
    tweet_id: str
    chunk: CandidateChunk
    skipped: bool = False

    def without_markers(self) -> tuple[str, ...]:
        return tuple(t for i, t in enumerate(self.tokens) if i not in (self.p, self.q))


def insert_markers(tweet: Tweet, chunk: CandidateChunk, tokenizer=None,
                   max_length: int = 128) -> MarkedSequence:
    """Enclose ``chunk`` in entity start/end marker tokens.

    Chunk boundaries that fall inside a token are realigned by expanding to
    the covering tokens. The marked token list is truncated to
    ``max_length``; if the end marker would be cut off, the sequence is
    flagged ``skipped`` instead.
    """
    tokenizer = tokenizer or RegexTokenizer()
    validate_chunk(chunk, tweet.text, tweet.tweet_id)
    spans = tokenizer.tokenize_with_offsets(tweet.text)
    if not spans:
        raise AlignmentError(f"tweet {tweet.tweet_id}: no tokens")
    first = next((i for i, s in enumerate(spans) if s.end > chunk.start), None)
    last = next((i for i in range(len(spans) - 1, -1, -1) if spans[i].start < chunk.end), None)
    if first is None or last is None or first > last:
        raise AlignmentError(
            f"tweet {tweet.tweet_id}: chunk [{chunk.start}, {chunk.end}) covers no token"
        )
    texts = [s.text for s in spans]
    tokens = texts[:first] + [ENTITY_START] + texts[first:last + 1] + [ENTITY_END] + texts[last + 1:]
    p, q = first, last + 2
    if q >= max_length:
        return MarkedSequence(tuple(tokens), p, q, tweet.tweet_id, chunk, skipped=True)
    return MarkedSequence(tuple(tokens[:max_length]), p, q, tweet.tweet_id, chunk)


# --- sentence normalization -------------------------------------------------

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_EMAIL_RE = re.compile(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+")
# Emoji and pictograph blocks plus variation selectors / ZWJ glue.
_EMOJI_RE = re.compile(
    "[\U0001F000-\U0001FAFF\U00002600-\U000027BF\U0001F1E6-\U0001F1FF"
    "\U0000FE0E\U0000FE0F\U0000200D\U00002B00-\U00002BFF]"
)
_PUNCT_RE = re.compile(r"[^\w\s]")


@lru_cache(maxsize=1)
def _default_decontractions() -> tuple[tuple[str, str], ...]:
    data = resources.files("tweetevents.data").joinpath("decontractions.txt").read_text("utf-8")
    return parse_decontractions(data)


def parse_decontractions(data: str) -> tuple[tuple[str, str], ...]:
    table = []
    for line in data.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        source, _, target = line.partition("=>")
        table.append((source.strip().lower(), target.strip().lower()))
    return tuple(table)


@lru_cache(maxsize=1)
def _default_wordlist() -> frozenset[str]:
    data = resources.files("tweetevents.data").joinpath("wordlist.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower() for line in data.splitlines()
        if line.strip() and not line.startswith("#")
    )


def load_decontractions(path) -> tuple[tuple[str, str], ...]:
    with open(path, encoding="utf-8") as fh:
        return parse_decontractions(fh.read())


def load_wordlist(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(
            line.strip().lower() for line in fh
            if line.strip() and not line.startswith("#")
        )


def _decontract(text: str, table: tuple[tuple[str, str], ...]) -> str:
    text = text.replace("’", "'")
    full = {src: dst for src, dst in table if not src.startswith("'") and not src.startswith("n't")}
    suffix = [(src, dst) for src, dst in table if src.startswith("'") or src == "n't"]
    if full:
        pattern = re.compile(
            r"\b(?<!')(" + "|".join(re.escape(s) for s in sorted(full, key=len, reverse=True)) + r")\b",
            re.IGNORECASE,
        )
        text = pattern.sub(lambda m: full[m.group(1).lower()], text)
    for src, dst in suffix:
        text = re.sub(r"(?<=\w)" + re.escape(src) + r"\b", " " + dst, text, flags=re.IGNORECASE)
    return text


def _segment_token(token: str, words: frozenset[str]) -> list[str] | None:
    lowered = token.lower()
    if lowered in words:
        return None
    max_len = max(map(len, words)) if words else 0
    parts = []
    i = 0
    while i < len(lowered):
        for j in range(min(len(lowered), i + max_len), i, -1):
            if lowered[i:j] in words:
                parts.append(lowered[i:j])
                i = j
                break
        else:
            return None
    return parts if len(parts) > 1 else None


def _segment(text: str, words: frozenset[str]) -> str:
    out = []
    for token in text.split():
        parts = _segment_token(token, words)
        out.extend(parts if parts else [token])
    return " ".join(out)


def normalize_sentence(text: str, decontractions=None, wordlist=None) -> str:
    """Normalize a tweet for the sentence-classification models.

    Deterministic and idempotent; empty output is allowed. Marker tokens
    never survive normalization.
    """
    table = decontractions if decontractions is not None else _default_decontractions()
    words = wordlist if wordlist is not None else _default_wordlist()
    s = text.replace(ENTITY_START, " ").replace(ENTITY_END, " ")
    s = _URL_RE.sub(" ", s)
    s = _EMAIL_RE.sub(" ", s)
    s = _EMOJI_RE.sub(" ", s)
    s = _decontract(s, table)
    s = _PUNCT_RE.sub(" ", s).replace("_", " ")
    s = _segment(s, words)
    s = s.lower()
    # Case folding can surface new combining marks (e.g. "İ" -> "i" + U+0307);
    # strip them so the pipeline stays idempotent.
    s = _PUNCT_RE.sub("", s)
    return " ".join(s.split())
