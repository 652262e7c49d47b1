"""Candidate slot extraction: noun chunks and named entities per tweet.

Backends are pluggable. The built-in :class:`RuleChunker` is a
deterministic fallback (no external tagger): it groups maximal runs of
non-function words into noun-chunk candidates and maximal runs of
capitalized words into named-entity candidates. For fidelity with an
external Twitter tagger, load its output with :func:`load_precomputed`
and wrap it in a :class:`PrecomputedChunker`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .corpus import Tweet
from .errors import ChunkerError, ValidationError

_TOKEN_RE = re.compile(r"[@#]?\w+(?:['’]\w+)*")


@dataclass(frozen=True, order=True)
class CandidateChunk:
    """A character-offset span of the tweet proposed as a slot answer.

    ``start`` is inclusive, ``end`` exclusive; ``text`` must equal
    ``tweet.text[start:end]``.
    """

    start: int
    end: int
    text: str


def validate_chunk(chunk: CandidateChunk, text: str, tweet_id: str = "?") -> None:
    if not (0 <= chunk.start < chunk.end <= len(text)):
        raise ValidationError(
            f"tweet {tweet_id}: chunk offsets [{chunk.start}, {chunk.end}) out of "
            f"range for text of length {len(text)}"
        )
    if text[chunk.start:chunk.end] != chunk.text:
        raise ValidationError(
            f"tweet {tweet_id}: chunk text {chunk.text!r} does not match "
            f"text[{chunk.start}:{chunk.end}] = {text[chunk.start:chunk.end]!r}"
        )


def _load_function_words() -> frozenset[str]:
    words = set()
    data = resources.files("tweetevents.data").joinpath("function_words.txt").read_text("utf-8")
    for line in data.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


class RuleChunker:
    """Deterministic rule-based candidate extractor.

    Noun-chunk proxies: maximal runs of consecutive tokens whose lowercase
    form is not in the function-word lexicon. Named-entity proxies: maximal
    runs of capitalized non-function tokens (these may nest inside a noun
    chunk; overlaps are kept). Candidates are deduplicated by span only.
    """

    def __init__(self, function_words: frozenset[str] | None = None):
        self.function_words = function_words if function_words is not None else _load_function_words()

    def _is_content(self, token: str) -> bool:
        return token.lower().lstrip("@#") not in self.function_words

    def candidates(self, tweet: Tweet) -> list[CandidateChunk]:
        matches = [(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(tweet.text)]
        chunks: set[tuple[int, int]] = set()

        def add_runs(predicate):
            run: list[tuple[str, int, int]] = []
            for token in matches + [("", -1, -1)]:  # sentinel flushes the last run
                if token[1] >= 0 and predicate(token[0]):
                    run.append(token)
                else:
                    if run:
                        chunks.add((run[0][1], run[-1][2]))
                    run = []

        add_runs(self._is_content)
        add_runs(lambda t: t[:1].isupper() and self._is_content(t))
        return [CandidateChunk(s, e, tweet.text[s:e]) for s, e in sorted(chunks)]


class PrecomputedChunker:
    """Backend serving candidates from a precomputed tweet_id -> chunks map.

    A tweet absent from the map is a backend failure: the caller asked for
    candidates the file does not provide.
    """

    def __init__(self, chunks_by_id: dict[str, list[CandidateChunk]]):
        self._chunks = chunks_by_id

    def candidates(self, tweet: Tweet) -> list[CandidateChunk]:
        try:
            return self._chunks[tweet.tweet_id]
        except KeyError:
            raise ChunkerError("no precomputed chunks", tweet_id=tweet.tweet_id) from None


def extract_candidates(tweet: Tweet, backend) -> list[CandidateChunk]:
    """Run a chunker backend on one tweet.

    Returns chunks sorted by (start, end) with duplicate spans removed;
    overlapping spans are allowed. Every chunk is validated against the
    tweet text. Backend failures surface as :class:`ChunkerError` carrying
    the tweet id.
    """
    if not tweet.text.strip():
        raise ValueError(f"tweet {tweet.tweet_id}: empty text")
    try:
        raw = backend.candidates(tweet)
    except ChunkerError:
        raise
    except Exception as exc:
        raise ChunkerError(str(exc), tweet_id=tweet.tweet_id) from exc
    seen: set[tuple[int, int]] = set()
    chunks: list[CandidateChunk] = []
    for chunk in sorted(raw):
        validate_chunk(chunk, tweet.text, tweet.tweet_id)
        if (chunk.start, chunk.end) in seen:
            continue
        seen.add((chunk.start, chunk.end))
        chunks.append(chunk)
    return chunks


def load_precomputed(path, texts: dict[str, str] | None = None) -> dict[str, list[CandidateChunk]]:
    """Load a precomputed-chunk file: tab-separated ``tweet_id start end text``.

    When ``texts`` provides a tweet's text, offsets and substring fidelity
    are validated; rows for ids not in ``texts`` are rejected. With
    ``texts=None`` rows are accepted as-is.
    """
    out: dict[str, list[CandidateChunk]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            parts = raw.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise ValidationError(f"line {lineno}: expected 4 tab-separated fields")
            tweet_id, start, end, text = parts
            try:
                chunk = CandidateChunk(int(start), int(end), text)
            except ValueError as exc:
                raise ValidationError(f"line {lineno}: bad offsets: {exc}") from exc
            if texts is not None:
                if tweet_id not in texts:
                    raise ValidationError(f"line {lineno}: unknown tweet_id {tweet_id!r}")
                validate_chunk(chunk, texts[tweet_id], tweet_id)
            out.setdefault(tweet_id, []).append(chunk)
    for tweet_id in out:
        out[tweet_id] = sorted(set(out[tweet_id]))
    return out
