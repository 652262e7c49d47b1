"""Sentence model unit tests against hand-computed and numpy oracles."""

import math

import numpy as np
import pytest
import torch

from tweetevents.corpus import default_registry
from tweetevents.encoder import EncoderConfig, HiddenSequence, TinyEncoder
from tweetevents.errors import ValidationError
from tweetevents.sentence_model import (
    ABSENT,
    EVENT_FEATURE_DIM,
    SentenceAttentionHead,
    SentenceClassificationModel,
    SentenceClassifierHead,
    SentenceEventHead,
    SentenceOutput,
    classify_sentence,
    pool_sequence,
    sentence_loss,
)


def hidden_from(rows):
    return HiddenSequence(torch.tensor(rows, dtype=torch.float64))


def attention_with(a, c=0.0):
    head = SentenceAttentionHead(len(a)).double()
    with torch.no_grad():
        head.a.copy_(torch.tensor(a, dtype=torch.float64))
        head.c.copy_(torch.tensor(c, dtype=torch.float64))
    return head


class TestPoolSequence:
    def test_zero_vector_any_offset_gives_mean(self):
        hs = hidden_from([[2.0, 4.0], [6.0, 0.0], [1.0, 5.0]])
        for c in (0.0, -3.0, 11.5):
            out = pool_sequence(hs, attention_with([0.0, 0.0], c))
            assert torch.allclose(out, torch.tensor([3.0, 3.0], dtype=torch.float64))

    def test_identical_rows_give_that_vector(self):
        hs = hidden_from([[1.5, -2.0], [1.5, -2.0]])
        out = pool_sequence(hs, attention_with([0.7, 0.3], 1.0))
        assert torch.allclose(out, torch.tensor([1.5, -2.0], dtype=torch.float64))

    def test_hand_computed_softmax_with_offset(self):
        rows = [[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]
        hs = hidden_from(rows)
        out = pool_sequence(hs, attention_with([1.0, 0.0], 0.5))
        scores = np.array([1.0, 0.0, 2.0]) + 0.5
        weights = np.exp(scores - scores.max())
        weights /= weights.sum()
        expected = weights @ np.array(rows)
        assert np.allclose(out.detach().numpy(), expected, atol=1e-9)

    def test_offset_shift_never_changes_output(self):
        rng = np.random.default_rng(0)
        rows = rng.normal(size=(5, 3))
        a = rng.normal(size=3).tolist()
        base = pool_sequence(hidden_from(rows.tolist()), attention_with(a, 0.0))
        for c in (-100.0, 0.25, 42.0):
            shifted = pool_sequence(hidden_from(rows.tolist()), attention_with(a, c))
            assert torch.allclose(base, shifted, atol=1e-6)

    def test_includes_cls_and_sep(self):
        # Sharpen attention onto the CLS row; the pool must follow it there.
        rows = [[10.0, 0.0], [0.0, 1.0], [0.0, 2.0]]
        out = pool_sequence(hidden_from(rows), attention_with([10.0, 0.0]))
        assert torch.allclose(out, torch.tensor([10.0, 0.0], dtype=torch.float64),
                              atol=1e-6)

    def test_weights_sum_and_hull(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n, d = rng.integers(2, 9), rng.integers(2, 5)
            rows = rng.normal(size=(n, d))
            head = attention_with(rng.normal(size=d).tolist(), float(rng.normal()))
            out = pool_sequence(hidden_from(rows.tolist()), head).detach().numpy()
            assert (out >= rows.min(axis=0) - 1e-9).all()
            assert (out <= rows.max(axis=0) + 1e-9).all()


class TestClassifySentence:
    def head_with(self, W, b):
        head = SentenceClassifierHead(1, len(b)).double()
        with torch.no_grad():
            head.W = torch.nn.Parameter(torch.tensor(W, dtype=torch.float64))
            head.b.copy_(torch.tensor(b, dtype=torch.float64))
        return head

    def test_zero_weight_returns_bias(self):
        head = SentenceClassifierHead(3, 4).double()
        with torch.no_grad():
            head.W.zero_()
            head.b.copy_(torch.tensor([0.1, 0.2, 0.3, 0.4], dtype=torch.float64))
        out = classify_sentence(torch.ones(3, dtype=torch.float64), None, head)
        assert torch.allclose(out, torch.tensor([0.1, 0.2, 0.3, 0.4], dtype=torch.float64))

    def test_three_labels_give_three_logits(self):
        head = SentenceClassifierHead(8, 3, EVENT_FEATURE_DIM).double()
        out = classify_sentence(torch.zeros(8, dtype=torch.float64),
                                torch.zeros(EVENT_FEATURE_DIM, dtype=torch.float64), head)
        assert tuple(out.shape) == (3,)

    def test_matches_numpy_concat_affine(self):
        rng = np.random.default_rng(2)
        hidden, feat, k = 6, EVENT_FEATURE_DIM, 4
        head = SentenceClassifierHead(hidden, k, feat).double()
        with torch.no_grad():
            head.W.copy_(torch.tensor(rng.normal(size=(hidden + feat, k))))
            head.b.copy_(torch.tensor(rng.normal(size=k)))
        pooled = rng.normal(size=hidden)
        h_prime = rng.normal(size=feat)
        expected = np.concatenate([pooled, h_prime]) @ head.W.detach().numpy() \
            + head.b.detach().numpy()
        got = classify_sentence(torch.tensor(pooled), torch.tensor(h_prime), head)
        assert np.allclose(got.detach().numpy(), expected, atol=1e-9)

    def test_dim_mismatch(self):
        head = SentenceClassifierHead(4, 2, 0)
        with pytest.raises(ValidationError):
            classify_sentence(torch.zeros(5), None, head)

    def test_single_label_rejected(self):
        with pytest.raises(ValidationError):
            SentenceClassifierHead(4, 1)


class TestSentenceEventHead:
    def test_hidden_dim_and_logits(self):
        head = SentenceEventHead(8).double().eval()
        hidden, logits = head(torch.zeros(3, 8, dtype=torch.float64))
        assert tuple(hidden.shape) == (3, EVENT_FEATURE_DIM)
        assert tuple(logits.shape) == (3, 2)

    def test_matches_numpy(self):
        head = SentenceEventHead(5).double().eval()
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 5))
        w1 = head.input.weight.detach().numpy()
        b1 = head.input.bias.detach().numpy()
        w2 = head.output.weight.detach().numpy()
        b2 = head.output.bias.detach().numpy()
        hidden = np.tanh(x @ w1.T + b1)
        hidden_t, logits_t = head(torch.tensor(x))
        assert np.allclose(hidden_t.detach().numpy(), hidden, atol=1e-9)
        assert np.allclose(logits_t.detach().numpy(), hidden @ w2.T + b2, atol=1e-9)


def subtasks_for(event):
    registry = default_registry()
    return {spec.id: spec.label_set
            for spec in registry.for_event(event, "sentence_classification")}


def make_model(event="tested_positive", **kwargs):
    encoder = TinyEncoder(EncoderConfig(seed=0))
    defaults = dict(subtask_labels=subtasks_for(event), seed=0)
    defaults.update(kwargs)
    return SentenceClassificationModel(encoder, **defaults).eval()


TOKENS = [["my", "aunt", "tested", "positive"], ["nothing", "to", "see"]]


class TestSentenceForward:
    def test_logit_shapes_per_label_set(self):
        model = make_model("tested_positive")
        out = model(TOKENS)
        assert tuple(out.subtask_logits["gender"].shape) == (2, 3)
        assert tuple(out.subtask_logits["relation"].shape) == (2, 2)
        assert tuple(out.event_logits.shape) == (2, 2)

    def test_opinion_has_four_logits(self):
        model = make_model("cure")
        out = model(TOKENS)
        assert tuple(out.subtask_logits["opinion"].shape) == (2, 4)

    def test_predictions_argmax_and_label_names(self):
        model = make_model("cure")
        out = SentenceOutput(None, {"opinion": torch.tensor([[0.0, 9.0, 0.0, 0.0]])})
        idx = out.predictions("opinion")
        assert idx.tolist() == [1]
        assert model.label_for("opinion", 1) == "no cure"

    def test_no_subtasks_rejected(self):
        with pytest.raises(ValidationError):
            make_model(subtask_labels={})

    def test_without_ces_heads_shrink(self):
        model = make_model(use_ces=False)
        assert model.classifiers["gender"].W.shape[0] == model.encoder.hidden_dim
        out = model(TOKENS)
        assert out.event_logits is None

    def test_cls_classification_mode(self):
        model = make_model(use_pooling=False, use_ces=False)
        out = model(TOKENS)
        hidden = model.encoder.encode_batch(TOKENS)
        for sid in model.subtask_ids:
            head = model.classifiers[sid]
            cls = torch.stack([h.vectors[0] for h in hidden])
            assert torch.equal(out.subtask_logits[sid], cls @ head.W + head.b)


class TestTiedSeeds:
    def test_full_W_prefix_equals_no_ces_W(self):
        full = make_model(seed=9)
        no_ces = make_model(seed=9, use_ces=False)
        hid = full.encoder.hidden_dim
        for sid in full.subtask_ids:
            assert torch.equal(full.classifiers[sid].W[:hid], no_ces.classifiers[sid].W)
            assert torch.equal(full.classifiers[sid].b, no_ces.classifiers[sid].b)
            assert torch.equal(full.attention[sid].a, no_ces.attention[sid].a)

    def test_zeroed_event_feature_matches_no_ces_exactly(self):
        full = make_model(seed=9)
        no_ces = make_model(seed=9, use_ces=False)
        hidden = full.encoder.encode_batch(TOKENS)
        for sid in full.subtask_ids:
            pooled = torch.stack([pool_sequence(h, full.attention[sid]) for h in hidden])
            zeros = torch.zeros(len(TOKENS), EVENT_FEATURE_DIM)
            a = classify_sentence(pooled, zeros, full.classifiers[sid])
            b = classify_sentence(pooled, None, no_ces.classifiers[sid])
            assert torch.equal(a, b)

    def test_live_event_feature_differs(self):
        full = make_model(seed=9)
        no_ces = make_model(seed=9, use_ces=False)
        a, b = full(TOKENS), no_ces(TOKENS)
        assert any(not torch.equal(a.subtask_logits[sid], b.subtask_logits[sid])
                   for sid in full.subtask_ids)


class TestSentenceLoss:
    def test_uniform_logits_oracle(self):
        out = SentenceOutput(
            torch.zeros(1, 2, dtype=torch.float64),
            {"k2": torch.zeros(1, 2, dtype=torch.float64),
             "k4": torch.zeros(1, 4, dtype=torch.float64)})
        loss = sentence_loss(out, torch.tensor([1]),
                             {"k2": torch.tensor([0]), "k4": torch.tensor([3])})
        expected = math.log(2) + math.log(2) + math.log(4)
        assert abs(loss.item() - expected) < 1e-9

    def test_confident_correct_is_zero(self):
        out = SentenceOutput(
            torch.tensor([[20.0, -20.0]], dtype=torch.float64),
            {"s": torch.tensor([[-20.0, 20.0, -20.0]], dtype=torch.float64)})
        loss = sentence_loss(out, torch.tensor([0]), {"s": torch.tensor([1])})
        assert loss.item() < 1e-6

    def test_lambda2_zero_drops_event_term(self):
        out = SentenceOutput(
            torch.zeros(1, 2, dtype=torch.float64),
            {"k4": torch.zeros(1, 4, dtype=torch.float64)})
        loss = sentence_loss(out, torch.tensor([1]), {"k4": torch.tensor([0])},
                             lambda2=0.0)
        assert abs(loss.item() - math.log(4)) < 1e-9

    def test_absent_labels_excluded(self):
        out = SentenceOutput(
            None, {"s": torch.zeros(2, 2, dtype=torch.float64)})
        loss = sentence_loss(out, None, {"s": torch.tensor([0, ABSENT])})
        # only example 0 contributes ln 2; mean over batch of 2
        assert abs(loss.item() - math.log(2) / 2) < 1e-9

    def test_all_absent_rejected(self):
        out = SentenceOutput(None, {"s": torch.zeros(1, 2, dtype=torch.float64)})
        with pytest.raises(ValidationError):
            sentence_loss(out, None, {"s": torch.tensor([ABSENT])})
