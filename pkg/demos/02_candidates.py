"""Candidate chunk extraction: which spans get to answer a slot question.

Slot filling is a binary decision per (tweet, candidate) pair, so recall
of the candidate generator bounds recall of the whole system. The rule
chunker proposes content-word runs and capitalized runs; a precomputed
chunker replays spans produced offline by a parser.
"""

from tweetevents.chunker import (CandidateChunk, PrecomputedChunker, RuleChunker,
                                 extract_candidates)
from tweetevents.corpus import Tweet
from tweetevents.pipeline import normalize_chunk

TWEETS = [
    Tweet("a", "My cousin Alice tested positive in Seattle on Monday"),
    Tweet("b", "BREAKING: two nurses at Mercy Hospital cannot get tested"),
    Tweet("c", "the lab results came back and nobody is sick"),
]

chunker = RuleChunker()
print("rule-based candidates")
print("=" * 72)
for tweet in TWEETS:
    print(f"  {tweet.text}")
    for chunk in extract_candidates(tweet, chunker):
        print(f"    [{chunk.start:>3}, {chunk.end:>3})  {chunk.text!r}")
    print()

# Candidates are deduplicated, sorted by offset, and validated against
# the tweet text, whatever the backend produced.
tweet = TWEETS[0]
spans = [tweet.text.index(word) for word in ("Alice", "Alice", "Seattle")]
replayed = PrecomputedChunker({
    tweet.tweet_id: [CandidateChunk(s, s + len(w), w)
                     for s, w in zip(spans, ("Alice", "Alice", "Seattle"))]
})
print("precomputed candidates (deduplicated, sorted)")
print("=" * 72)
for chunk in extract_candidates(tweet, replayed):
    print(f"    [{chunk.start:>3}, {chunk.end:>3})  {chunk.text!r}")

# Gold matching ignores case, surrounding punctuation and run-on spaces.
print()
print("gold-chunk normalization")
print("=" * 72)
for raw in ('"Alice"', "  alice ", "ALICE!!"):
    print(f"    {raw!r:>12} -> {normalize_chunk(raw)!r}")
