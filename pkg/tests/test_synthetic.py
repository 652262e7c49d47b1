"""The generated corpus must be well-formed and give the rule chunker a
fair shot: every gold slot answer has to appear among the candidates."""

import pytest

from tweetevents.chunker import RuleChunker, extract_candidates
from tweetevents.corpus import default_registry
from tweetevents.synthetic import make_synthetic_corpus


def test_size_and_event():
    corpus = make_synthetic_corpus(64, seed=0)
    assert len(corpus) == 64
    assert {ex.event for ex in corpus} == {"tested_positive"}


def test_too_small_rejected():
    with pytest.raises(ValueError):
        make_synthetic_corpus(1)


def test_deterministic_per_seed():
    a = make_synthetic_corpus(32, seed=5)
    b = make_synthetic_corpus(32, seed=5)
    assert [ex.tweet.text for ex in a] == [ex.tweet.text for ex in b]
    c = make_synthetic_corpus(32, seed=6)
    assert [ex.tweet.text for ex in a] != [ex.tweet.text for ex in c]


def test_mix_of_event_and_off_event():
    corpus = make_synthetic_corpus(64, seed=0, negative_fraction=0.25)
    labels = [ex.event_label for ex in corpus]
    assert labels.count(0) == 16
    assert labels.count(1) == 48


def test_unique_tweet_ids():
    corpus = make_synthetic_corpus(50, seed=3)
    ids = [ex.tweet_id for ex in corpus]
    assert len(set(ids)) == len(ids)


def test_annotations_fit_the_registry():
    registry = default_registry()
    for ex in make_synthetic_corpus(40, seed=1):
        for sid in ex.slot_gold:
            assert registry.get(ex.event, sid).kind == "slot_filling"
        for sid, label in ex.sentence_gold.items():
            assert label in registry.get(ex.event, sid).label_set


def test_positive_examples_fill_who_where_when():
    for ex in make_synthetic_corpus(64, seed=0):
        if ex.event_label == 1:
            assert len(ex.slot_gold["who"]) == 1
            assert len(ex.slot_gold["where"]) == 1
            assert len(ex.slot_gold["when"]) == 1
        else:
            assert all(not texts for texts in ex.slot_gold.values())


def test_gold_chunks_are_candidate_chunks():
    chunker = RuleChunker()
    for ex in make_synthetic_corpus(64, seed=0):
        texts = {c.text for c in extract_candidates(ex.tweet, chunker)}
        for sid, golds in ex.slot_gold.items():
            for gold in golds:
                assert gold in texts, (ex.tweet.text, sid, gold)


def test_label_signals_match_the_text():
    for ex in make_synthetic_corpus(64, seed=2):
        text = ex.tweet.text
        if ex.event_label == 1:
            assert ("My cousin" in text) == (ex.sentence_gold["relation"] == "Yes")
            if " she " in text:
                assert ex.sentence_gold["gender"] == "Female"
            elif " he " in text:
                assert ex.sentence_gold["gender"] == "Male"
        else:
            assert ex.sentence_gold["relation"] == "No"
