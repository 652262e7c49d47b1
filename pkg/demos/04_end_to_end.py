"""Train, tune, evaluate and predict on the synthetic corpus, end to end.

The synthetic corpus encodes learnable patterns (names answer "who",
cities answer "where", pronouns carry the gender label), so a tiny
encoder trained for a couple hundred steps solves it. This is the same
flow the command-line interface drives, called as a library.
"""

import time

from tweetevents.corpus import Tweet, split
from tweetevents.pipeline import (TrainConfig, evaluate, predict, train,
                                  tune_thresholds)
from tweetevents.synthetic import make_synthetic_corpus

EVENT = "tested_positive"

corpus = make_synthetic_corpus(64, seed=0)
assignment = split(corpus, seed=0)
train_set = [ex for ex in corpus if ex.tweet_id in assignment.train_ids]
valid_set = [ex for ex in corpus if ex.tweet_id in assignment.valid_ids]
print(f"corpus: {len(corpus)} examples, {len(train_set)} train / {len(valid_set)} valid")

config = TrainConfig(learning_rate=3e-3, epochs_slot=8, epochs_sentence=50,
                     max_steps=200, seed=0)
print(f"config fingerprint: {config.fingerprint()}")

started = time.monotonic()
slot = train("slot", corpus, assignment, config)
sentence = train("sentence", corpus, assignment, config)
print(f"trained both families in {time.monotonic() - started:.1f}s "
      f"({slot.log[-1]['steps']} + {sentence.log[-1]['steps']} steps)")
print(f"slot loss by epoch: {[round(e['loss'], 3) for e in slot.log]}")

thresholds = tune_thresholds(slot, valid_set)
print(f"tuned thresholds: {thresholds.to_json()}")

report = evaluate(valid_set, [slot, sentence], thresholds)
print()
print(report.to_text())

records = predict(
    {EVENT: {"slot": slot, "sentence": sentence}},
    thresholds,
    [(Tweet("q1", "The patient Bob tested positive in Denver on Friday "
                  "and he feels fine"), EVENT),
     (Tweet("q2", "the weather in Boston is great and nobody mentioned "
                  "any testing"), EVENT)],
)
print("predictions on unseen tweets")
print("=" * 72)
for record in records:
    filled = {sid: list(chunks) for sid, chunks in record.slots.items() if chunks}
    print(f"  {record.tweet_id}: slots {filled or '{}'}  sentences {record.sentences}")
