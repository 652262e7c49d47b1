"""Contextual sequence encoders: one hidden vector per token.

Two families behind one interface. :class:`TinyEncoder` is a small
randomly-initialized transformer, fully deterministic given a seed, meant
for tests and desk-scale runs. :class:`PretrainedEncoder` wraps an external
transformer checkpoint (domain tweet encoder, generic large, generic base)
named by a model identifier in the run config; it needs the optional
``transformers`` dependency and a local model cache or network access.

Every encoder consumes a pre-tokenized word list and returns a
:class:`HiddenSequence` of shape ``[len(tokens) + 2, hidden_dim]``: one
vector per input token plus CLS at index 0 and SEP at the end.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace

import torch
from torch import nn

from .errors import ConfigError, ValidationError
from .preprocess import ENTITY_END, ENTITY_START
from .seeding import seed_parameters

VARIANTS = ("pretrained_domain", "pretrained_large", "pretrained_base", "tiny_test")


@dataclass(frozen=True)
class EncoderConfig:
    variant: str = "tiny_test"
    hidden_dim: int = 32
    max_length: int = 128
    special_tokens: tuple[str, str] = (ENTITY_START, ENTITY_END)
    seed: int = 0
    # External checkpoint identifier; required for pretrained_* variants.
    model_id: str | None = None
    num_layers: int = 2
    num_heads: int = 4

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown encoder variant {self.variant!r}")
        if self.hidden_dim <= 0 or self.max_length <= 0:
            raise ConfigError("hidden_dim and max_length must be positive")
        if self.variant != "tiny_test" and not self.model_id:
            raise ConfigError(f"variant {self.variant!r} requires model_id")


@dataclass
class HiddenSequence:
    """Encoder output for one sequence.

    ``vectors`` has one row per position including CLS (index 0) and SEP
    (last index). ``marker_indices``, when set, point at the entity
    start/end marker rows of ``vectors``.
    """

    vectors: torch.Tensor
    marker_indices: tuple[int, int] | None = None

    cls_index: int = 0

    @property
    def sep_index(self) -> int:
        return self.vectors.shape[0] - 1

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] < 2:
            raise ValidationError(
                f"hidden sequence must be [seq_len >= 2, hidden], got {tuple(self.vectors.shape)}"
            )


class TinyEncoder(nn.Module):
    """Deterministic small transformer encoder over a hashed vocabulary.

    Tokens map to embedding buckets by CRC-32, so no vocabulary fitting
    step exists and encoding is reproducible across processes. Marker and
    bookkeeping tokens get reserved ids.
    """

    N_BUCKETS = 4096
    PAD, UNK, CLS, SEP = 0, 1, 2, 3
    _SPECIAL_BASE = 4

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self._special_ids = {tok: self._SPECIAL_BASE + i
                             for i, tok in enumerate(config.special_tokens)}
        vocab = self._SPECIAL_BASE + len(self._special_ids) + self.N_BUCKETS
        self.embeddings = nn.Embedding(vocab, config.hidden_dim, padding_idx=self.PAD)
        self.positions = nn.Embedding(config.max_length + 2, config.hidden_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.hidden_dim, nhead=config.num_heads,
            dim_feedforward=4 * config.hidden_dim, dropout=0.1,
            activation="gelu", batch_first=True)
        # The nested-tensor inference fast path is disabled so training and
        # evaluation share one padded code path.
        self.transformer = nn.TransformerEncoder(layer, num_layers=config.num_layers,
                                                 enable_nested_tensor=False)
        seed_parameters(self, config.seed)

    @property
    def hidden_dim(self) -> int:
        return self.config.hidden_dim

    def token_id(self, token: str) -> int:
        if token in self._special_ids:
            return self._special_ids[token]
        base = self._SPECIAL_BASE + len(self._special_ids)
        return base + zlib.crc32(token.encode("utf-8")) % self.N_BUCKETS

    def _ids(self, tokens: list[str]) -> list[int]:
        if len(tokens) > self.config.max_length:
            raise ValidationError(
                f"sequence of {len(tokens)} tokens exceeds max_length {self.config.max_length}"
            )
        return [self.CLS] + [self.token_id(t) for t in tokens] + [self.SEP]

    def forward(self, ids: torch.Tensor, padding_mask: torch.Tensor | None = None) -> torch.Tensor:
        pos = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        x = self.embeddings(ids) + self.positions(pos)
        return self.transformer(x, src_key_padding_mask=padding_mask)

    def encode(self, tokens: list[str],
               marker_indices: tuple[int, int] | None = None) -> HiddenSequence:
        ids = torch.tensor([self._ids(list(tokens))])
        vectors = self.forward(ids)[0]
        return HiddenSequence(vectors, _shift_markers(marker_indices, tokens))

    def encode_batch(self, token_lists, marker_index_lists=None) -> list[HiddenSequence]:
        """Encode several sequences in one padded forward pass."""
        if marker_index_lists is None:
            marker_index_lists = [None] * len(token_lists)
        id_lists = [self._ids(list(t)) for t in token_lists]
        width = max(map(len, id_lists))
        ids = torch.full((len(id_lists), width), self.PAD, dtype=torch.long)
        mask = torch.ones(len(id_lists), width, dtype=torch.bool)
        for row, id_list in enumerate(id_lists):
            ids[row, :len(id_list)] = torch.tensor(id_list)
            mask[row, :len(id_list)] = False
        out = self.forward(ids, padding_mask=mask)
        return [
            HiddenSequence(out[row, :len(id_list)], _shift_markers(markers, tokens))
            for row, (id_list, tokens, markers)
            in enumerate(zip(id_lists, token_lists, marker_index_lists))
        ]


def _shift_markers(marker_indices, tokens):
    # Token-list indices move by one once CLS is prepended.
    if marker_indices is None:
        return None
    p, q = marker_indices
    if not (0 <= p < q < len(tokens)):
        raise ValidationError(f"marker indices ({p}, {q}) invalid for {len(tokens)} tokens")
    return (p + 1, q + 1)


class PretrainedEncoder(nn.Module):
    """Adapter over an external transformer checkpoint.

    Words that the checkpoint's tokenizer splits into several pieces are
    represented by their first piece, keeping the one-vector-per-token
    shape contract. Construct via :meth:`from_config` (loads by model id)
    or inject a (tokenizer, model) pair directly for hermetic tests.
    """

    def __init__(self, tokenizer, model, config: EncoderConfig):
        super().__init__()
        self.tokenizer = tokenizer
        self.model = model
        self.config = replace(config, hidden_dim=model.config.hidden_size)
        register_special_tokens(self)

    @classmethod
    def from_config(cls, config: EncoderConfig):
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ConfigError(
                "pretrained encoder variants need the 'transformers' extra installed"
            ) from exc
        tokenizer = AutoTokenizer.from_pretrained(config.model_id)
        model = AutoModel.from_pretrained(config.model_id)
        return cls(tokenizer, model, config)

    @property
    def hidden_dim(self) -> int:
        return self.config.hidden_dim

    def encode(self, tokens: list[str],
               marker_indices: tuple[int, int] | None = None) -> HiddenSequence:
        return self.encode_batch([tokens], [marker_indices])[0]

    def encode_batch(self, token_lists, marker_index_lists=None) -> list[HiddenSequence]:
        if marker_index_lists is None:
            marker_index_lists = [None] * len(token_lists)
        for tokens in token_lists:
            if len(tokens) > self.config.max_length:
                raise ValidationError(
                    f"sequence of {len(tokens)} tokens exceeds max_length {self.config.max_length}"
                )
        batch = self.tokenizer(
            [list(t) for t in token_lists], is_split_into_words=True,
            padding=True, return_tensors="pt", truncation=False)
        out = self.model(**batch).last_hidden_state
        results = []
        for row, (tokens, markers) in enumerate(zip(token_lists, marker_index_lists)):
            word_ids = batch.word_ids(row)
            first_piece = {}
            for piece_index, word_index in enumerate(word_ids):
                if word_index is not None and word_index not in first_piece:
                    first_piece[word_index] = piece_index
            if len(first_piece) != len(tokens):
                raise ValidationError(
                    f"tokenizer dropped {len(tokens) - len(first_piece)} of "
                    f"{len(tokens)} words; cannot keep one vector per token"
                )
            sep = max(i for i, w in enumerate(word_ids) if w is None and i > 0)
            rows = [0] + [first_piece[i] for i in range(len(tokens))] + [sep]
            vectors = out[row, rows]
            results.append(HiddenSequence(vectors, _shift_markers(markers, tokens)))
        return results


def register_special_tokens(encoder) -> None:
    """Make the entity markers atomic tokens of a pretrained tokenizer.

    New embedding rows start at the mean of the existing embedding matrix
    plus small seeded noise. Calling this twice is a no-op.
    """
    if not hasattr(encoder, "tokenizer"):
        return  # hashed-vocabulary encoders reserve marker ids up front
    tokenizer, model = encoder.tokenizer, encoder.model
    missing = [t for t in encoder.config.special_tokens
               if tokenizer.convert_tokens_to_ids(t) in (None, tokenizer.unk_token_id)]
    if not missing:
        return
    old_size = len(tokenizer)
    tokenizer.add_special_tokens({"additional_special_tokens": missing})
    model.resize_token_embeddings(len(tokenizer))
    with torch.no_grad():
        table = model.get_input_embeddings().weight
        mean = table[:old_size].mean(dim=0)
        generator = torch.Generator().manual_seed(encoder.config.seed)
        for row in range(old_size, len(tokenizer)):
            noise = torch.empty_like(mean).normal_(0.0, 0.01, generator=generator)
            table[row] = mean + noise


def build_encoder(config: EncoderConfig):
    if config.variant == "tiny_test":
        return TinyEncoder(config)
    return PretrainedEncoder.from_config(config)
