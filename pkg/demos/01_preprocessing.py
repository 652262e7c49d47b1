"""Walk through the two text pipelines: sentence normalization and
entity-marker insertion.

The sentence-classification models read a normalized token sequence.
The slot-filling model instead keeps the raw tweet and wraps one
candidate chunk in marker tokens, so span indices stay meaningful.
"""

from tweetevents.corpus import Tweet
from tweetevents.chunker import CandidateChunk
from tweetevents.preprocess import (ENTITY_END, ENTITY_START, RegexTokenizer,
                                    insert_markers, normalize_sentence)

MESSY = [
    "Just got my results... I haven't tested positive!! https://t.co/xyz 🎉",
    "BREAKING: my co-worker can't get a #covidtest in NYC",
    "She won't be going to work. Isn't that the safest call?",
]

print("sentence normalization")
print("=" * 72)
for text in MESSY:
    print(f"  raw : {text}")
    print(f"  norm: {normalize_sentence(text)}")
    print()

# Normalization is idempotent: running it twice changes nothing.
once = normalize_sentence(MESSY[0])
assert normalize_sentence(once) == once

print("entity markers (slot-filling path)")
print("=" * 72)
tweet = Tweet("demo-1", "My cousin Alice tested positive in Seattle on Monday")
start = tweet.text.index("Alice")
chunk = CandidateChunk(start, start + len("Alice"), "Alice")
marked = insert_markers(tweet, chunk)
print(f"  tweet : {tweet.text}")
print(f"  chunk : {chunk.text!r} at [{chunk.start}, {chunk.end})")
print(f"  tokens: {' '.join(marked.tokens)}")
print(f"  p={marked.p} -> {marked.tokens[marked.p]!r}   "
      f"q={marked.q} -> {marked.tokens[marked.q]!r}")
assert marked.tokens[marked.p] == ENTITY_START
assert marked.tokens[marked.q] == ENTITY_END

# Dropping the two markers recovers the original tokenization exactly.
tokenizer = RegexTokenizer()
assert marked.without_markers() == tuple(tokenizer.tokenize(tweet.text))
print("  round trip without markers: ok")

# Sequences whose end marker would fall beyond max_length are flagged,
# never silently truncated mid-span.
long_tweet = Tweet("demo-2", "word " * 200 + "Alice")
start = long_tweet.text.index("Alice")
flagged = insert_markers(long_tweet, CandidateChunk(start, start + 5, "Alice"),
                         max_length=128)
print(f"  over-length sequence skipped: {flagged.skipped}")
