"""Synthetic annotated corpora with learnable patterns.

The generated tweets follow rigid templates, so a small model can reach
near-perfect training scores quickly: who/where/when slot answers come
from disjoint closed vocabularies, the relation label is carried by the
first word, and the gender label by a pronoun. The rule-based chunker is
guaranteed to propose every gold chunk as a candidate.
"""

from __future__ import annotations

import random

from .corpus import AnnotatedExample, Tweet

NAMES = ("Alice", "Bob", "Carol", "David", "Emma", "Frank", "Grace", "Henry")
CITIES = ("Seattle", "Boston", "Denver", "Austin", "Portland", "Chicago")
DAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")
TOPICS = ("weather", "game", "music", "traffic", "garden", "movie")
PRONOUN_GENDER = (("she", "Female"), ("he", "Male"), ("they", "Others/Not Specified"))

EMPTY_SLOTS = ("age", "recent-visit", "employer", "close-contact")


def _positive_example(i: int, rng: random.Random) -> AnnotatedExample:
    name = rng.choice(NAMES)
    city = rng.choice(CITIES)
    day = rng.choice(DAYS)
    pronoun, gender = rng.choice(PRONOUN_GENDER)
    related = rng.random() < 0.5
    opener = "My cousin" if related else "The patient"
    text = f"{opener} {name} tested positive in {city} on {day} and {pronoun} feels fine"
    slot_gold = {"who": {name}, "where": {city}, "when": {day}}
    slot_gold.update({sid: set() for sid in EMPTY_SLOTS})
    sentence_gold = {"gender": gender, "relation": "Yes" if related else "No"}
    return AnnotatedExample(Tweet(f"syn{i}", text), "tested_positive", 1,
                            slot_gold, sentence_gold)


def _negative_example(i: int, rng: random.Random) -> AnnotatedExample:
    topic = rng.choice(TOPICS)
    city = rng.choice(CITIES)
    text = f"the {topic} in {city} is great and nobody mentioned any testing"
    slot_gold = {sid: set() for sid in ("who", "where", "when") + EMPTY_SLOTS}
    sentence_gold = {"gender": "Others/Not Specified", "relation": "No"}
    return AnnotatedExample(Tweet(f"syn{i}", text), "tested_positive", 0,
                            slot_gold, sentence_gold)


def make_synthetic_corpus(n: int = 64, seed: int = 0,
                          negative_fraction: float = 0.25) -> list[AnnotatedExample]:
    """Build ``n`` annotated tested_positive examples, a mix of event
    tweets with filled slots and off-event tweets with empty ones."""
    if n < 2:
        raise ValueError("need at least 2 examples")
    rng = random.Random(f"synthetic:{seed}")
    n_negative = max(1, int(n * negative_fraction))
    examples = []
    for i in range(n):
        if i < n - n_negative:
            examples.append(_positive_example(i, rng))
        else:
            examples.append(_negative_example(i, rng))
    return examples
