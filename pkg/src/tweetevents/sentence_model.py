"""Sentence-classification model: per-subtask attention pooling over the
whole sequence, an event-prediction MLP on CLS, and per-subtask affine
heads over the pooled vector concatenated with the event hidden state.

Unlike the slot model the subtasks here are k-way, so event information
enters as a 50-dimensional feature concatenated before the affine head
rather than as added logits. Per-subtask prediction is an argmax; no
decision thresholds exist on this path.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .encoder import HiddenSequence
from .errors import ValidationError
from .seeding import seed_parameters

EVENT_FEATURE_DIM = 50


class SentenceAttentionHead(nn.Module):
    """Score vector and scalar offset for one subtask's sequence attention."""

    def __init__(self, hidden_dim: int):
        super().__init__()
        self.a = nn.Parameter(torch.empty(hidden_dim))
        self.c = nn.Parameter(torch.empty(()))


class SentenceEventHead(nn.Module):
    """MLP on CLS exposing both its hidden state and its 2 event logits."""

    def __init__(self, hidden_dim: int, mlp_hidden: int = EVENT_FEATURE_DIM,
                 dropout: float = 0.1):
        super().__init__()
        self.input = nn.Linear(hidden_dim, mlp_hidden)
        self.activation = nn.Tanh()
        self.dropout = nn.Dropout(dropout)
        self.output = nn.Linear(mlp_hidden, 2)

    def forward(self, cls_vector: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        hidden = self.dropout(self.activation(self.input(cls_vector)))
        return hidden, self.output(hidden)


class SentenceClassifierHead(nn.Module):
    """Affine head: logits = [pooled ; event_feature]^T W + b.

    W is stored input-major ([in_dim, k]) so its first hidden_dim rows
    line up with the no-feature variant's weight under the per-name
    seeded fill; without the event feature in_dim is just hidden_dim.
    """

    def __init__(self, hidden_dim: int, n_labels: int, event_feature_dim: int = 0):
        super().__init__()
        if n_labels < 2:
            raise ValidationError(f"a subtask needs at least 2 labels, got {n_labels}")
        self.W = nn.Parameter(torch.empty(hidden_dim + event_feature_dim, n_labels))
        self.b = nn.Parameter(torch.empty(n_labels))


def pool_sequence(hidden: HiddenSequence, head: SentenceAttentionHead) -> torch.Tensor:
    """Attention-weighted pool over every position, CLS and SEP included.

    The scalar offset c shifts all scores equally, so it never changes the
    weights; it is kept because the scoring function is defined with it.
    """
    scores = hidden.vectors @ head.a + head.c
    weights = torch.softmax(scores, dim=0)
    return weights @ hidden.vectors


def classify_sentence(pooled: torch.Tensor, event_feature: torch.Tensor | None,
                      head: SentenceClassifierHead) -> torch.Tensor:
    features = pooled if event_feature is None else torch.cat(
        [pooled, event_feature], dim=-1)
    if features.shape[-1] != head.W.shape[0]:
        raise ValidationError(
            f"feature dim {features.shape[-1]} does not match head dim {head.W.shape[0]}"
        )
    return features @ head.W + head.b


@dataclass
class SentenceOutput:
    """Forward results: event logits (None without the auxiliary task) and
    per-subtask logits of shape [batch, k_j]."""

    event_logits: torch.Tensor | None
    subtask_logits: dict[str, torch.Tensor]

    def predictions(self, subtask_id: str) -> torch.Tensor:
        return self.subtask_logits[subtask_id].argmax(dim=-1)


class SentenceClassificationModel(nn.Module):
    """Multi-task sentence stack for one event.

    ``subtask_labels`` maps subtask id to its ordered label set.
    ``use_pooling=False`` classifies the CLS vector directly (the plain
    multi-task baseline); ``use_ces=False`` drops the event head and the
    concatenated feature, shrinking each W to [hidden_dim, k]. Parameters
    shared between configurations get identical seeded initial values.
    """

    def __init__(self, encoder, subtask_labels: dict[str, tuple[str, ...]],
                 use_pooling: bool = True, use_ces: bool = True, seed: int = 0,
                 dropout: float = 0.1):
        super().__init__()
        if not subtask_labels:
            raise ValidationError("sentence model needs at least one subtask")
        self.subtask_labels = {sid: tuple(labels) for sid, labels in subtask_labels.items()}
        self.subtask_ids = tuple(self.subtask_labels)
        self.use_pooling = use_pooling
        self.use_ces = use_ces
        self.encoder = encoder
        hidden = encoder.hidden_dim
        feature_dim = EVENT_FEATURE_DIM if use_ces else 0
        if use_pooling:
            self.attention = nn.ModuleDict(
                {sid: SentenceAttentionHead(hidden) for sid in self.subtask_ids})
        self.classifiers = nn.ModuleDict(
            {sid: SentenceClassifierHead(hidden, len(labels), feature_dim)
             for sid, labels in self.subtask_labels.items()})
        if use_ces:
            self.event_head = SentenceEventHead(hidden, dropout=dropout)
        seed_parameters(self, seed, skip=("encoder.",))

    def forward(self, token_lists) -> SentenceOutput:
        """Encode a batch of normalized token lists and score every subtask."""
        hidden_seqs = self.encoder.encode_batch([list(t) for t in token_lists])
        cls_vectors = torch.stack([h.vectors[h.cls_index] for h in hidden_seqs])
        event_feature = event_logits = None
        if self.use_ces:
            event_feature, event_logits = self.event_head(cls_vectors)

        subtask_logits = {}
        for sid in self.subtask_ids:
            if self.use_pooling:
                pooled = torch.stack(
                    [pool_sequence(h, self.attention[sid]) for h in hidden_seqs])
            else:
                pooled = cls_vectors
            subtask_logits[sid] = classify_sentence(
                pooled, event_feature, self.classifiers[sid])
        return SentenceOutput(event_logits, subtask_logits)

    def label_for(self, subtask_id: str, index: int) -> str:
        return self.subtask_labels[subtask_id][index]


ABSENT = -1


def sentence_loss(output: SentenceOutput, event_labels: torch.Tensor | None,
                  subtask_labels: dict[str, torch.Tensor],
                  lambda2: float = 1.0) -> torch.Tensor:
    """Joint loss: lambda2 * CE(event) + sum over subtasks of CE, averaged
    over the batch. Labels equal to ``ABSENT`` (-1) drop that subtask term
    for that example. Raises if no term is present anywhere.
    """
    if lambda2 < 0:
        raise ValidationError("lambda2 must be >= 0")
    some_logits = next(iter(output.subtask_logits.values()))
    batch = some_logits.shape[0]
    total = torch.zeros(batch, dtype=some_logits.dtype, device=some_logits.device)
    n_terms = 0
    if output.event_logits is not None and event_labels is not None:
        total = total + lambda2 * F.cross_entropy(
            output.event_logits, event_labels, reduction="none")
        n_terms += batch
    for sid, logits in output.subtask_logits.items():
        labels = subtask_labels.get(sid)
        if labels is None:
            continue
        present = labels != ABSENT
        if not present.any():
            continue
        ce = F.cross_entropy(logits, labels.clamp(min=0), reduction="none")
        total = total + ce * present.to(ce.dtype)
        n_terms += int(present.sum())
    if n_terms == 0:
        raise ValidationError("loss has no terms: all labels absent")
    return total.mean()
