"""Training loops, threshold tuning, evaluation, prediction and the
ablation-configuration catalogue.

Everything here is event-scoped: one model instance covers one event's
subtask set, and multi-event reports are built by merging per-event count
tables. All randomness flows from ``TrainConfig.seed`` through named
derived seeds, so a fixed config reproduces runs bit for bit on a single
thread.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import random
import string
from dataclasses import dataclass
from hashlib import sha256
from typing import Iterable, Mapping

import torch

from .chunker import RuleChunker, extract_candidates
from .corpus import (NO_CONSENSUS, SENTENCE_CLASSIFICATION, SLOT_FILLING,
                     AnnotatedExample, SplitAssignment, SubtaskRegistry, Tweet,
                     default_registry)
from .encoder import VARIANTS, EncoderConfig, build_encoder
from .errors import (ConfigError, FingerprintMismatchError, ParseError,
                     SchemaError, ValidationError)
from .metrics import THRESHOLD_GRID, Counts, best_threshold, macro_f1, micro
from .preprocess import MarkedSequence, insert_markers, normalize_sentence
from .seeding import derive_seed
from .sentence_model import SentenceClassificationModel, sentence_loss
from .slot_model import ABSENT, SlotFillingModel, slot_loss

logger = logging.getLogger(__name__)

FAMILIES = ("slot", "sentence")

_EVAL_BATCH = 64


@dataclass(frozen=True)
class TrainConfig:
    """One run's hyperparameters and architecture flags.

    ``use_pooling``, ``use_ces`` and ``encoder_variant`` are the ablation
    axes; everything else matches the defaults used for the full system.
    ``max_steps`` caps total optimizer steps across epochs (None = no cap).
    """

    learning_rate: float = 2e-5
    optimizer: str = "adam"
    epochs_slot: int = 8
    epochs_sentence: int = 10
    batch_size: int = 16
    seed: int = 0
    dropout: float = 0.1
    lambda1: float = 1.0
    lambda2: float = 1.0
    use_pooling: bool = True
    use_ces: bool = True
    encoder_variant: str = "tiny_test"
    hidden_dim: int = 32
    max_length: int = 128
    max_steps: int | None = None
    model_id: str | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.optimizer != "adam":
            raise ConfigError(f"unsupported optimizer {self.optimizer!r}")
        # epochs 0 is allowed: it yields the initialization checkpoint.
        if self.epochs_slot < 0 or self.epochs_sentence < 0:
            raise ConfigError("epoch counts must be >= 0")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0 <= self.dropout < 1:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("loss weights must be >= 0")
        if self.encoder_variant not in VARIANTS:
            raise ConfigError(f"unknown encoder variant {self.encoder_variant!r}")
        # model_id is checked when the encoder is built, not here, so
        # ablation configs for pretrained variants can be declared first
        # and paired with a checkpoint id per run.
        if self.hidden_dim <= 0 or self.max_length <= 0:
            raise ConfigError("hidden_dim and max_length must be positive")
        if self.max_steps is not None and self.max_steps < 0:
            raise ConfigError(f"max_steps must be >= 0, got {self.max_steps}")

    def fingerprint(self) -> str:
        return fingerprint(self)


def fingerprint(config: TrainConfig) -> str:
    """12-hex-digit digest of the canonical config JSON. Every artifact a
    run produces embeds it, and evaluate refuses mismatched artifacts."""
    canonical = json.dumps(dataclasses.asdict(config), sort_keys=True,
                           separators=(",", ":"))
    return sha256(canonical.encode("utf-8")).hexdigest()[:12]


def encoder_config(config: TrainConfig) -> EncoderConfig:
    return EncoderConfig(variant=config.encoder_variant, hidden_dim=config.hidden_dim,
                         max_length=config.max_length, seed=config.seed,
                         model_id=config.model_id)


# --------------------------------------------------------------------------
# Training instances

_STRIP_CHARS = string.punctuation + "’‘“”…"


def normalize_chunk(text: str) -> str:
    """Matching key for slot answers: lowercase, whitespace collapsed,
    surrounding punctuation stripped. Interior punctuation is kept."""
    text = " ".join(text.lower().split())
    return text.strip(_STRIP_CHARS).strip()


@dataclass
class SlotInstance:
    """One (tweet, candidate chunk) pair with binary labels for every slot
    subtask annotated on that tweet."""

    tweet_id: str
    event: str
    marked: MarkedSequence
    chunk_text: str
    labels: dict[str, int]
    event_label: int


@dataclass
class SentenceInstance:
    """One tweet's normalized tokens with label indices for every sentence
    subtask annotated on it."""

    tweet_id: str
    event: str
    tokens: tuple[str, ...]
    labels: dict[str, int]
    event_label: int


def build_slot_instances(examples: Iterable[AnnotatedExample], registry: SubtaskRegistry,
                         chunker, max_length: int = 128,
                         normalizer=normalize_chunk) -> tuple[list[SlotInstance], int]:
    """Expand examples into per-candidate instances.

    A candidate is positive for a subtask iff its normalized text matches
    a normalized gold answer. Candidates whose end marker would fall
    beyond ``max_length`` are dropped; the second return value counts
    them. Examples with no slot annotations contribute nothing.
    """
    instances: list[SlotInstance] = []
    skipped = 0
    for example in examples:
        if not example.slot_gold:
            continue
        if not example.tweet.text:
            raise ValidationError(f"tweet {example.tweet_id} has no text; hydrate first")
        gold = {sid: {normalizer(t) for t in texts}
                for sid, texts in example.slot_gold.items()}
        for sid in gold:
            registry.get(example.event, sid)  # unknown ids fail loudly here
        for chunk in extract_candidates(example.tweet, chunker):
            marked = insert_markers(example.tweet, chunk, max_length=max_length)
            if marked.skipped:
                skipped += 1
                continue
            key = normalizer(chunk.text)
            labels = {sid: int(key in gold_set) for sid, gold_set in gold.items()}
            instances.append(SlotInstance(example.tweet_id, example.event, marked,
                                          chunk.text, labels, example.event_label))
    return instances, skipped


def build_sentence_instances(examples: Iterable[AnnotatedExample],
                             registry: SubtaskRegistry) -> list[SentenceInstance]:
    """Turn examples into normalized-token instances with label indices.

    NO_CONSENSUS labels must be filtered out beforehand; meeting one here
    is an error rather than a silent drop."""
    instances: list[SentenceInstance] = []
    for example in examples:
        if not example.sentence_gold:
            continue
        labels: dict[str, int] = {}
        for sid, label in example.sentence_gold.items():
            if label == NO_CONSENSUS:
                raise SchemaError(
                    f"tweet {example.tweet_id}: {example.event}/{sid} is NO_CONSENSUS; "
                    "run filter_no_consensus before building instances")
            spec = registry.get(example.event, sid)
            if label not in spec.label_set:
                raise SchemaError(
                    f"tweet {example.tweet_id}: label {label!r} not in the label set "
                    f"of {example.event}/{sid}")
            labels[sid] = spec.label_set.index(label)
        tokens = tuple(normalize_sentence(example.tweet.text).split())
        instances.append(SentenceInstance(example.tweet_id, example.event, tokens,
                                          labels, example.event_label))
    return instances


# --------------------------------------------------------------------------
# Training

@dataclass
class TrainResult:
    """A trained (or initialization-only) model plus its provenance."""

    family: str
    event: str
    model: torch.nn.Module
    config: TrainConfig
    log: list[dict]
    fingerprint: str


def _slot_batch_loss(model: SlotFillingModel, batch: list[SlotInstance],
                     config: TrainConfig) -> torch.Tensor:
    output = model([inst.marked for inst in batch])
    event_labels = None
    if model.use_ces:
        event_labels = torch.tensor([inst.event_label for inst in batch])
    labels = {sid: torch.tensor([inst.labels.get(sid, ABSENT) for inst in batch])
              for sid in model.subtask_ids}
    return slot_loss(output, event_labels, labels, config.lambda1)


def _sentence_batch_loss(model: SentenceClassificationModel,
                         batch: list[SentenceInstance],
                         config: TrainConfig) -> torch.Tensor:
    output = model([inst.tokens for inst in batch])
    event_labels = None
    if model.use_ces:
        event_labels = torch.tensor([inst.event_label for inst in batch])
    labels = {sid: torch.tensor([inst.labels.get(sid, ABSENT) for inst in batch])
              for sid in model.subtask_ids}
    return sentence_loss(output, event_labels, labels, config.lambda2)


def train(family: str, examples: Iterable[AnnotatedExample], split: SplitAssignment,
          config: TrainConfig, registry: SubtaskRegistry | None = None,
          chunker=None) -> TrainResult:
    """Train one model family for one event on the split's train side.

    ``examples`` must all belong to a single event. Deterministic given
    the config: seeding, data order and thread count are all pinned. The
    per-epoch log records the mean batch loss.
    """
    if family not in FAMILIES:
        raise ConfigError(f"unknown model family {family!r}; expected one of {FAMILIES}")
    examples = list(examples)
    events = {ex.event for ex in examples}
    if len(events) != 1:
        raise ValidationError(
            f"train expects examples from exactly one event, got {sorted(events)}")
    event = events.pop()
    train_examples = [ex for ex in examples if ex.tweet_id in split.train_ids]
    if not train_examples:
        raise ValidationError(f"empty train split for event {event}")
    registry = registry or default_registry()
    chunker = chunker if chunker is not None else RuleChunker()

    torch.manual_seed(derive_seed(config.seed, f"train:{family}:{event}"))
    torch.set_num_threads(1)
    encoder = build_encoder(encoder_config(config))
    if family == "slot":
        instances, n_skipped = build_slot_instances(
            train_examples, registry, chunker, max_length=config.max_length)
        if n_skipped:
            logger.info("event %s: %d over-length candidates skipped", event, n_skipped)
        model: torch.nn.Module = SlotFillingModel(
            encoder, registry.slot_ids(event), use_pooling=config.use_pooling,
            use_ces=config.use_ces, seed=config.seed, dropout=config.dropout)
        epochs = config.epochs_slot
        batch_loss = _slot_batch_loss
    else:
        instances = build_sentence_instances(train_examples, registry)
        subtask_labels = {s.id: s.label_set
                          for s in registry.for_event(event, SENTENCE_CLASSIFICATION)}
        model = SentenceClassificationModel(
            encoder, subtask_labels, use_pooling=config.use_pooling,
            use_ces=config.use_ces, seed=config.seed, dropout=config.dropout)
        epochs = config.epochs_sentence
        batch_loss = _sentence_batch_loss
    if not instances:
        raise ValidationError(f"no {family} training instances for event {event}")

    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    log: list[dict] = []
    steps_done = 0
    model.train()
    for epoch in range(epochs):
        if config.max_steps is not None and steps_done >= config.max_steps:
            break
        order = list(range(len(instances)))
        random.Random(f"{config.seed}:{family}:{event}:{epoch}").shuffle(order)
        losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            if config.max_steps is not None and steps_done >= config.max_steps:
                break
            batch = [instances[i] for i in order[start:start + config.batch_size]]
            loss = batch_loss(model, batch, config)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            steps_done += 1
            losses.append(float(loss.detach()))
        if losses:
            log.append({"epoch": epoch + 1, "loss": sum(losses) / len(losses),
                        "steps": steps_done})
    model.eval()
    return TrainResult(family, event, model, config, log, config.fingerprint())


# --------------------------------------------------------------------------
# Thresholds

@dataclass(frozen=True)
class ThresholdTable:
    """Per (event, slot subtask) decision threshold, grid values only."""

    values: Mapping[tuple[str, str], float]

    def __post_init__(self):
        object.__setattr__(self, "values", dict(self.values))
        for (event, sid), value in self.values.items():
            if value not in THRESHOLD_GRID:
                raise ValidationError(
                    f"threshold {value} for {event}/{sid} is off the grid {THRESHOLD_GRID}")

    def get(self, event: str, sid: str) -> float:
        try:
            return self.values[(event, sid)]
        except KeyError:
            raise ValidationError(f"no threshold for subtask {event}/{sid}") from None

    def to_json(self) -> str:
        nested: dict[str, dict[str, float]] = {}
        for (event, sid), value in sorted(self.values.items()):
            nested.setdefault(event, {})[sid] = value
        return json.dumps(nested, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "ThresholdTable":
        nested = json.loads(text)
        return cls({(event, sid): value
                    for event, per_sid in nested.items()
                    for sid, value in per_sid.items()})


def save_thresholds(table: ThresholdTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(table.to_json())
        fh.write("\n")


def load_thresholds(path) -> ThresholdTable:
    with open(path, encoding="utf-8") as fh:
        return ThresholdTable.from_json(fh.read())


def _require_family(result: TrainResult, family: str) -> None:
    if result.family != family:
        raise ConfigError(f"expected a {family} model, got {result.family}")


def _slot_scores(result: TrainResult, examples, registry: SubtaskRegistry,
                 chunker, normalizer):
    """Yield (instance, {sid: positive probability}) in deterministic order."""
    instances, _ = build_slot_instances(examples, registry, chunker,
                                        max_length=result.config.max_length,
                                        normalizer=normalizer)
    model = result.model
    model.eval()
    with torch.no_grad():
        for start in range(0, len(instances), _EVAL_BATCH):
            batch = instances[start:start + _EVAL_BATCH]
            output = model([inst.marked for inst in batch])
            probs = {sid: output.positive_probability(sid).tolist()
                     for sid in model.subtask_ids}
            for row, inst in enumerate(batch):
                yield inst, {sid: probs[sid][row] for sid in model.subtask_ids}


def tune_thresholds(result: TrainResult, examples: Iterable[AnnotatedExample],
                    registry: SubtaskRegistry | None = None, chunker=None,
                    normalizer=normalize_chunk) -> ThresholdTable:
    """Grid-search the decision threshold per slot subtask on ``examples``.

    The selected value maximizes that subtask's instance-level F1; ties go
    to the smallest threshold. A subtask with no annotated instances gets
    0.5 and a warning.
    """
    _require_family(result, "slot")
    registry = registry or default_registry()
    chunker = chunker if chunker is not None else RuleChunker()
    examples = list(examples)
    probs: dict[str, list[float]] = {sid: [] for sid in result.model.subtask_ids}
    golds: dict[str, list[int]] = {sid: [] for sid in result.model.subtask_ids}
    for inst, inst_probs in _slot_scores(result, examples, registry, chunker, normalizer):
        for sid, label in inst.labels.items():
            probs[sid].append(inst_probs[sid])
            golds[sid].append(label)
    values: dict[tuple[str, str], float] = {}
    for sid in result.model.subtask_ids:
        if probs[sid]:
            values[(result.event, sid)] = best_threshold(probs[sid], golds[sid])
        else:
            logger.warning("subtask %s/%s has no tuning instances; threshold "
                           "defaults to 0.5", result.event, sid)
            values[(result.event, sid)] = 0.5
    return ThresholdTable(values)


# --------------------------------------------------------------------------
# Evaluation

def slot_counts(result: TrainResult, examples: Iterable[AnnotatedExample],
                thresholds: ThresholdTable, registry: SubtaskRegistry | None = None,
                chunker=None, normalizer=normalize_chunk) -> dict[tuple[str, str], Counts]:
    """Per (event, subtask) TP/FP/FN of thresholded slot predictions.

    For each annotated (tweet, subtask): predictions are the normalized
    texts of candidates scoring at or above the threshold; TP counts
    predictions matching a normalized gold text, FP the rest, FN the gold
    texts never predicted. Gold chunks lost to candidate skipping still
    count as FN.
    """
    _require_family(result, "slot")
    registry = registry or default_registry()
    chunker = chunker if chunker is not None else RuleChunker()
    examples = [ex for ex in examples if ex.slot_gold]
    gold: dict[tuple[str, str], set[str]] = {}
    for example in examples:
        for sid, texts in example.slot_gold.items():
            gold[(example.tweet_id, sid)] = {normalizer(t) for t in texts}
    predicted: dict[tuple[str, str], set[str]] = {key: set() for key in gold}
    for inst, inst_probs in _slot_scores(result, examples, registry, chunker, normalizer):
        for sid in inst.labels:
            if inst_probs[sid] >= thresholds.get(result.event, sid):
                predicted[(inst.tweet_id, sid)].add(normalizer(inst.chunk_text))
    counts: dict[tuple[str, str], Counts] = {}
    for (tweet_id, sid), gold_set in gold.items():
        pred_set = predicted[(tweet_id, sid)]
        key = (result.event, sid)
        counts[key] = counts.get(key, Counts()) + Counts(
            len(pred_set & gold_set), len(pred_set - gold_set), len(gold_set - pred_set))
    return counts


def sentence_counts(result: TrainResult, examples: Iterable[AnnotatedExample],
                    registry: SubtaskRegistry | None = None) -> dict[tuple[str, str], Counts]:
    """Per (event, subtask) counts for sentence predictions: a correct
    label is one TP, a wrong one is one FP plus one FN, so the micro F1
    over a scope equals its accuracy."""
    _require_family(result, "sentence")
    registry = registry or default_registry()
    instances = build_sentence_instances(examples, registry)
    model = result.model
    model.eval()
    counts: dict[tuple[str, str], Counts] = {}
    with torch.no_grad():
        for start in range(0, len(instances), _EVAL_BATCH):
            batch = instances[start:start + _EVAL_BATCH]
            output = model([inst.tokens for inst in batch])
            preds = {sid: output.predictions(sid).tolist() for sid in model.subtask_ids}
            for row, inst in enumerate(batch):
                for sid, gold_index in inst.labels.items():
                    key = (result.event, sid)
                    hit = preds[sid][row] == gold_index
                    counts[key] = counts.get(key, Counts()) + (
                        Counts(1, 0, 0) if hit else Counts(0, 1, 1))
    return counts


@dataclass(frozen=True)
class EvalReport:
    """Metrics at three scopes plus the thresholds and fingerprint used.

    ``per_subtask`` and ``thresholds`` are keyed "event/subtask";
    ``per_event`` holds each event's micro scores pooled over its
    subtasks; ``overall`` holds the global micro scores and the macro F1
    (mean per-subtask F1, empty scopes skipped)."""

    fingerprint: str
    per_subtask: dict[str, dict]
    per_event: dict[str, dict]
    overall: dict
    thresholds: dict[str, float]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True,
                          separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        payload = json.loads(text)
        return cls(**{f.name: payload[f.name] for f in dataclasses.fields(cls)})

    def to_text(self) -> str:
        lines = [f"config {self.fingerprint}", "",
                 f"{'scope':<28}{'P':>8}{'R':>8}{'F1':>8}"]
        for event, scores in sorted(self.per_event.items()):
            lines.append(f"{event:<28}{scores['precision']:>8.3f}"
                         f"{scores['recall']:>8.3f}{scores['f1']:>8.3f}")
        overall = self.overall["micro"]
        lines.append(f"{'overall (micro)':<28}{overall['precision']:>8.3f}"
                     f"{overall['recall']:>8.3f}{overall['f1']:>8.3f}")
        lines.append(f"{'overall macro F1':<28}{'':>8}{'':>8}"
                     f"{self.overall['macro_f1']:>8.3f}")
        lines.extend(["", f"{'subtask':<28}{'P':>8}{'R':>8}{'F1':>8}   threshold"])
        for key, scores in sorted(self.per_subtask.items()):
            threshold = self.thresholds.get(key)
            suffix = f"   {threshold:.1f}" if threshold is not None else ""
            lines.append(f"{key:<28}{scores['precision']:>8.3f}"
                         f"{scores['recall']:>8.3f}{scores['f1']:>8.3f}{suffix}")
        return "\n".join(lines) + "\n"


def build_report(counts: Mapping[tuple[str, str], Counts],
                 thresholds: ThresholdTable | None,
                 fingerprint: str) -> EvalReport:
    if not counts:
        raise ValidationError("cannot build a report from no counts")
    per_subtask = {f"{event}/{sid}": c.as_dict()
                   for (event, sid), c in sorted(counts.items())}
    by_event: dict[str, list[Counts]] = {}
    for (event, _), c in sorted(counts.items()):
        by_event.setdefault(event, []).append(c)
    per_event = {event: micro(cs).as_dict() for event, cs in by_event.items()}
    overall = {"micro": micro(counts.values()).as_dict(),
               "macro_f1": macro_f1(counts.values())}
    used = {}
    if thresholds is not None:
        used = {f"{event}/{sid}": value
                for (event, sid), value in sorted(thresholds.values.items())
                if (event, sid) in counts}
    return EvalReport(fingerprint, per_subtask, per_event, overall, used)


def evaluate(examples: Iterable[AnnotatedExample], results: Iterable[TrainResult],
             thresholds: ThresholdTable | None = None,
             registry: SubtaskRegistry | None = None, chunker=None) -> EvalReport:
    """Score one or more trained models on their events' examples and
    merge everything into a single report.

    All models must share a config fingerprint; at most one model per
    (event, family) is allowed; slot models require a threshold table.
    """
    results = list(results)
    if not results:
        raise ConfigError("no models to evaluate")
    fingerprints = {r.fingerprint for r in results}
    if len(fingerprints) != 1:
        raise FingerprintMismatchError(
            f"models span several config fingerprints: {sorted(fingerprints)}")
    seen: set[tuple[str, str]] = set()
    examples = list(examples)
    counts: dict[tuple[str, str], Counts] = {}
    for result in results:
        key = (result.event, result.family)
        if key in seen:
            raise ValidationError(f"duplicate model for {key}")
        seen.add(key)
        subset = [ex for ex in examples if ex.event == result.event]
        if result.family == "slot":
            if thresholds is None:
                raise ConfigError("slot evaluation needs a threshold table")
            fresh = slot_counts(result, subset, thresholds, registry, chunker)
        else:
            fresh = sentence_counts(result, subset, registry)
        for sub_key, c in fresh.items():
            counts[sub_key] = counts.get(sub_key, Counts()) + c
    return build_report(counts, thresholds, fingerprints.pop())


# --------------------------------------------------------------------------
# Prediction

@dataclass(frozen=True)
class PredictionRecord:
    """End-to-end output for one tweet: predicted chunk texts per slot
    subtask and one label per sentence subtask."""

    tweet_id: str
    event: str
    slots: dict[str, tuple[str, ...]]
    sentences: dict[str, str]


def predict(models: Mapping[str, Mapping[str, TrainResult]],
            thresholds: ThresholdTable, tweets: Iterable[tuple[Tweet, str]],
            registry: SubtaskRegistry | None = None,
            chunker=None) -> list[PredictionRecord]:
    """Run both families end to end over (tweet, event) pairs.

    ``models`` maps event -> {"slot": result, "sentence": result}; both
    families must be present for every event encountered. Slot predictions
    keep the raw chunk text of every candidate whose positive probability
    clears the subtask threshold.
    """
    registry = registry or default_registry()
    chunker = chunker if chunker is not None else RuleChunker()
    records: list[PredictionRecord] = []
    for tweet, event in tweets:
        for family in FAMILIES:
            if event not in models or family not in models[event]:
                raise ValidationError(f"missing {family} model for event {event}")
        slot_result = models[event]["slot"]
        sentence_result = models[event]["sentence"]
        _require_family(slot_result, "slot")
        _require_family(sentence_result, "sentence")

        slots: dict[str, set[str]] = {sid: set() for sid in slot_result.model.subtask_ids}
        marked = []
        for chunk in extract_candidates(tweet, chunker):
            seq = insert_markers(tweet, chunk, max_length=slot_result.config.max_length)
            if not seq.skipped:
                marked.append((seq, chunk))
        if marked:
            slot_result.model.eval()
            with torch.no_grad():
                output = slot_result.model([seq for seq, _ in marked])
                for sid in slots:
                    threshold = thresholds.get(event, sid)
                    probs = output.positive_probability(sid).tolist()
                    for (_, chunk), prob in zip(marked, probs):
                        if prob >= threshold:
                            slots[sid].add(chunk.text)

        tokens = tuple(normalize_sentence(tweet.text).split())
        sentence_result.model.eval()
        with torch.no_grad():
            output = sentence_result.model([tokens])
            sentences = {sid: sentence_result.model.label_for(
                             sid, int(output.predictions(sid)[0]))
                         for sid in sentence_result.model.subtask_ids}
        records.append(PredictionRecord(
            tweet.tweet_id, event,
            {sid: tuple(sorted(texts)) for sid, texts in slots.items()},
            dict(sorted(sentences.items()))))
    return records


def _record_to_dict(record: PredictionRecord) -> dict:
    return {"tweet_id": record.tweet_id, "event": record.event,
            "slots": {sid: sorted(texts) for sid, texts in sorted(record.slots.items())},
            "sentences": {sid: record.sentences[sid] for sid in sorted(record.sentences)}}


def write_predictions(records: Iterable[PredictionRecord], path) -> None:
    """One canonical JSON object per line; write -> read -> write is
    byte-identical."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(_record_to_dict(record), sort_keys=True,
                                separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")


def read_predictions(path, registry: SubtaskRegistry | None = None) -> list[PredictionRecord]:
    registry = registry or default_registry()
    records: list[PredictionRecord] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                payload = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            for field in ("tweet_id", "event", "slots", "sentences"):
                if field not in payload:
                    raise ParseError(f"missing field {field!r}", line=lineno)
            event = payload["event"]
            for sid in payload["slots"]:
                spec = registry.get(event, sid)
                if spec.kind != SLOT_FILLING:
                    raise SchemaError(f"line {lineno}: {event}/{sid} is not a slot subtask")
            for sid, label in payload["sentences"].items():
                spec = registry.get(event, sid)
                if spec.kind != SENTENCE_CLASSIFICATION:
                    raise SchemaError(
                        f"line {lineno}: {event}/{sid} is not a sentence subtask")
                if label not in spec.label_set:
                    raise SchemaError(
                        f"line {lineno}: label {label!r} not in the label set of "
                        f"{event}/{sid}")
            records.append(PredictionRecord(
                str(payload["tweet_id"]), event,
                {sid: tuple(sorted(texts)) for sid, texts in payload["slots"].items()},
                dict(payload["sentences"])))
    return records


# --------------------------------------------------------------------------
# Ablation catalogue

@dataclass(frozen=True)
class AblationSpec:
    """A named architecture variant: which family it applies to ("slot",
    "sentence" or "both") and the flags it overrides."""

    name: str
    family: str
    config: TrainConfig


# name -> (family, config overrides). The slot rows cover the full system,
# its two component removals, and plain-encoder baselines; the sentence
# rows mirror that; bert_separate is the no-extras base-encoder run of
# both families.
ABLATIONS: dict[str, tuple[str, dict]] = {
    "sf_full": ("slot", {}),
    "sf_wo_pool": ("slot", {"use_pooling": False}),
    "sf_wo_ces": ("slot", {"use_ces": False}),
    "sf_encoder_domain": ("slot", {"use_pooling": False, "use_ces": False,
                                   "encoder_variant": "pretrained_domain"}),
    "sf_encoder_large": ("slot", {"use_pooling": False, "use_ces": False,
                                  "encoder_variant": "pretrained_large"}),
    "sf_encoder_base": ("slot", {"use_pooling": False, "use_ces": False,
                                 "encoder_variant": "pretrained_base"}),
    "sc_full": ("sentence", {}),
    "sc_wo_ces": ("sentence", {"use_ces": False}),
    "sc_multitask_domain": ("sentence", {"use_pooling": False, "use_ces": False,
                                         "encoder_variant": "pretrained_domain"}),
    "sc_multitask_base": ("sentence", {"use_pooling": False, "use_ces": False,
                                       "encoder_variant": "pretrained_base"}),
    "bert_separate": ("both", {"use_pooling": False, "use_ces": False,
                               "encoder_variant": "pretrained_base"}),
}


def ablation_matrix(names: Iterable[str],
                    base: TrainConfig | None = None) -> list[AblationSpec]:
    """Resolve ablation names into configs differing from ``base`` only in
    the catalogued flags. Unknown names raise with the valid set listed."""
    base = base or TrainConfig()
    specs: list[AblationSpec] = []
    for name in names:
        if name not in ABLATIONS:
            raise ConfigError(
                f"unknown ablation {name!r}; valid names: {', '.join(sorted(ABLATIONS))}")
        family, overrides = ABLATIONS[name]
        specs.append(AblationSpec(name, family, dataclasses.replace(base, **overrides)))
    return specs


# --------------------------------------------------------------------------
# Checkpoints

def save_checkpoint(result: TrainResult, path) -> None:
    """Persist weights plus config, fingerprint and training log. The
    payload holds only tensors and JSON strings, so it loads under
    weights-only deserialization."""
    torch.save({
        "family": result.family,
        "event": result.event,
        "config": json.dumps(dataclasses.asdict(result.config), sort_keys=True),
        "fingerprint": result.fingerprint,
        "log": json.dumps(result.log),
        "state_dict": result.model.state_dict(),
    }, path)


def load_checkpoint(path, registry: SubtaskRegistry | None = None,
                    expected_fingerprint: str | None = None) -> TrainResult:
    """Rebuild a model skeleton from the stored config and load weights.

    Raises :class:`FingerprintMismatchError` when the stored fingerprint
    disagrees with ``expected_fingerprint`` or with the stored config."""
    registry = registry or default_registry()
    payload = torch.load(path, map_location="cpu", weights_only=True)
    config = TrainConfig(**json.loads(payload["config"]))
    stored = payload["fingerprint"]
    if stored != config.fingerprint():
        raise FingerprintMismatchError(
            f"checkpoint fingerprint {stored} does not match its own config "
            f"({config.fingerprint()})")
    if expected_fingerprint is not None and stored != expected_fingerprint:
        raise FingerprintMismatchError(
            f"checkpoint {path} was produced under config {stored}, expected "
            f"{expected_fingerprint}")
    family, event = payload["family"], payload["event"]
    encoder = build_encoder(encoder_config(config))
    if family == "slot":
        model: torch.nn.Module = SlotFillingModel(
            encoder, registry.slot_ids(event), use_pooling=config.use_pooling,
            use_ces=config.use_ces, seed=config.seed, dropout=config.dropout)
    elif family == "sentence":
        subtask_labels = {s.id: s.label_set
                          for s in registry.for_event(event, SENTENCE_CLASSIFICATION)}
        model = SentenceClassificationModel(
            encoder, subtask_labels, use_pooling=config.use_pooling,
            use_ces=config.use_ces, seed=config.seed, dropout=config.dropout)
    else:
        raise SchemaError(f"checkpoint has unknown family {family!r}")
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return TrainResult(family, event, model, config, json.loads(payload["log"]), stored)
