"""Slot-filling model: per-subtask span pooling and binary heads plus an
auxiliary event-prediction head whose logits are fused into every subtask.

Data flow for one marked sequence: the encoder yields hidden vectors; each
subtask attention head pools the candidate span (markers inclusive) into
one vector; a per-subtask affine head turns it into 2 logits; the event
head reads CLS and its logits pass through one shared fusion MLP whose
output is added to every subtask's logits. Training minimizes the event
cross-entropy plus the sum of subtask cross-entropies.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .corpus import SLOT_LABELS
from .encoder import HiddenSequence
from .errors import ValidationError
from .seeding import seed_parameters

POSITIVE_INDEX = SLOT_LABELS.index("positive")


class SlotAttentionHead(nn.Module):
    """Trainable score vector for one subtask's span attention."""

    def __init__(self, hidden_dim: int):
        super().__init__()
        self.a = nn.Parameter(torch.empty(hidden_dim))


class SlotClassifierHead(nn.Module):
    """Binary affine head: logits = W @ pooled + b."""

    def __init__(self, hidden_dim: int):
        super().__init__()
        self.W = nn.Parameter(torch.empty(2, hidden_dim))
        self.b = nn.Parameter(torch.empty(2))


class EventPredictionHead(nn.Module):
    """MLP on the CLS vector producing 2 event logits."""

    def __init__(self, hidden_dim: int, mlp_hidden: int = 50, dropout: float = 0.1):
        super().__init__()
        self.input = nn.Linear(hidden_dim, mlp_hidden)
        self.activation = nn.Tanh()
        self.dropout = nn.Dropout(dropout)
        self.output = nn.Linear(mlp_hidden, 2)

    def forward(self, cls_vector: torch.Tensor) -> torch.Tensor:
        return self.output(self.dropout(self.activation(self.input(cls_vector))))


class FusionMLP(nn.Module):
    """Shared transform of event logits added to each subtask's logits."""

    def __init__(self, hidden: int = 4, dropout: float = 0.1, slope: float = 0.1):
        super().__init__()
        self.input = nn.Linear(2, hidden)
        self.activation = nn.LeakyReLU(slope)
        self.dropout = nn.Dropout(dropout)
        self.output = nn.Linear(hidden, 2)

    def forward(self, event_logits: torch.Tensor) -> torch.Tensor:
        return self.output(self.dropout(self.activation(self.input(event_logits))))


def pool_span(hidden: HiddenSequence, p: int, q: int, head: SlotAttentionHead) -> torch.Tensor:
    """Attention-weighted pool of the inclusive span [p, q].

    Weights are a softmax of per-position scores x_i . a over exactly that
    span, so positions outside it cannot influence the result.
    """
    if not 0 <= p <= q < hidden.vectors.shape[0]:
        raise ValidationError(
            f"span ({p}, {q}) invalid for sequence of length {hidden.vectors.shape[0]}"
        )
    span = hidden.vectors[p:q + 1]
    weights = torch.softmax(span @ head.a, dim=0)
    return weights @ span


def score_subtask(pooled: torch.Tensor, head: SlotClassifierHead) -> torch.Tensor:
    if pooled.shape[-1] != head.W.shape[1]:
        raise ValidationError(
            f"pooled dim {pooled.shape[-1]} does not match head dim {head.W.shape[1]}"
        )
    return pooled @ head.W.T + head.b


def fuse_event_logits(h: torch.Tensor, h_ces: torch.Tensor, fusion: FusionMLP) -> torch.Tensor:
    return h + fusion(h_ces)


@dataclass
class SlotOutput:
    """Forward results: event logits (None without the auxiliary task) and
    per-subtask fused logits, each of shape [batch, 2]."""

    event_logits: torch.Tensor | None
    subtask_logits: dict[str, torch.Tensor]

    def positive_probability(self, subtask_id: str) -> torch.Tensor:
        return torch.softmax(self.subtask_logits[subtask_id], dim=-1)[..., POSITIVE_INDEX]


class SlotFillingModel(nn.Module):
    """Multi-task slot-filling stack for one event's subtask set.

    ``use_pooling=False`` replaces span pooling with the entity-start
    hidden vector (the plain-encoder baseline head). ``use_ces=False``
    removes the event head and fusion MLP. Both flags change only the
    named wiring: parameters shared between configurations get identical
    seeded initial values.
    """

    def __init__(self, encoder, subtask_ids, use_pooling: bool = True,
                 use_ces: bool = True, seed: int = 0, dropout: float = 0.1):
        super().__init__()
        subtask_ids = tuple(subtask_ids)
        if not subtask_ids:
            raise ValidationError("slot model needs at least one subtask")
        if len(set(subtask_ids)) != len(subtask_ids):
            raise ValidationError(f"duplicate subtask ids: {subtask_ids}")
        self.subtask_ids = subtask_ids
        self.use_pooling = use_pooling
        self.use_ces = use_ces
        self.encoder = encoder
        hidden = encoder.hidden_dim
        if use_pooling:
            self.attention = nn.ModuleDict(
                {sid: SlotAttentionHead(hidden) for sid in subtask_ids})
        self.classifiers = nn.ModuleDict(
            {sid: SlotClassifierHead(hidden) for sid in subtask_ids})
        if use_ces:
            self.event_head = EventPredictionHead(hidden, dropout=dropout)
            self.fusion = FusionMLP(dropout=dropout)
        seed_parameters(self, seed, skip=("encoder.",))

    def forward(self, sequences) -> SlotOutput:
        """Encode a batch of MarkedSequence and score every subtask."""
        sequences = list(sequences)
        if any(s.skipped for s in sequences):
            raise ValidationError("skipped sequences must be filtered before the model")
        hidden_seqs = self.encoder.encode_batch(
            [s.tokens for s in sequences], [(s.p, s.q) for s in sequences])
        cls_vectors = torch.stack([h.vectors[h.cls_index] for h in hidden_seqs])
        event_logits = self.event_head(cls_vectors) if self.use_ces else None

        subtask_logits = {}
        for sid in self.subtask_ids:
            if self.use_pooling:
                pooled = torch.stack([
                    pool_span(h, *h.marker_indices, self.attention[sid])
                    for h in hidden_seqs])
            else:
                pooled = torch.stack([h.vectors[h.marker_indices[0]] for h in hidden_seqs])
            h = score_subtask(pooled, self.classifiers[sid])
            if self.use_ces:
                h = fuse_event_logits(h, event_logits, self.fusion)
            subtask_logits[sid] = h
        return SlotOutput(event_logits, subtask_logits)


ABSENT = -1


def slot_loss(output: SlotOutput, event_labels: torch.Tensor | None,
              subtask_labels: dict[str, torch.Tensor], lambda1: float = 1.0) -> torch.Tensor:
    """Joint loss: lambda1 * CE(event) + sum over subtasks of CE, averaged
    over the batch. Labels equal to ``ABSENT`` (-1) drop that subtask term
    for that example. Raises if no term is present anywhere.
    """
    if lambda1 < 0:
        raise ValidationError("lambda1 must be >= 0")
    some_logits = next(iter(output.subtask_logits.values()))
    batch = some_logits.shape[0]
    total = torch.zeros(batch, dtype=some_logits.dtype, device=some_logits.device)
    n_terms = 0
    if output.event_logits is not None and event_labels is not None:
        total = total + lambda1 * F.cross_entropy(
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
