"""Data model and corpus handling.

The corpus is line-delimited JSON. One record per annotated tweet:

    {"tweet_id": "...", "event": "tested_positive", "event_label": 1,
     "slot_gold": {"who": ["John"], "where": []},
     "sentence_gold": {"gender": "Male", "relation": "NO_CONSENSUS"},
     "text": "..."}

``text`` is optional at rest (the upstream release ships tweet ids only)
and is filled in by :func:`hydrate`. In ``slot_gold``, a key mapped to an
empty list means "annotated: no answer"; a missing key means "this subtask
was not annotated for this tweet". ``sentence_gold`` uses the explicit
``NO_CONSENSUS`` sentinel for annotator disagreement; a missing key again
means "not annotated".
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import ParseError, SchemaError

EVENTS = ("tested_positive", "tested_negative", "can_not_test", "death", "cure")

SLOT_FILLING = "slot_filling"
SENTENCE_CLASSIFICATION = "sentence_classification"

NO_CONSENSUS = "NO_CONSENSUS"

#: Binary label set shared by every slot-filling subtask; index 1 is positive.
SLOT_LABELS = ("negative", "positive")


@dataclass(frozen=True)
class SubtaskSpec:
    """One event-specific subtask: its kind, label set and optional label merge."""

    id: str
    event: str
    kind: str
    label_set: tuple[str, ...]
    label_merge_map: Mapping[str, str] | None = None

    def __post_init__(self):
        if not self.label_set:
            raise SchemaError(f"subtask {self.event}/{self.id}: empty label set")
        if self.kind == SLOT_FILLING and len(self.label_set) != 2:
            raise SchemaError(
                f"slot subtask {self.event}/{self.id} must be binary, "
                f"got {len(self.label_set)} labels"
            )
        if self.label_merge_map:
            missing = [t for t in self.label_merge_map.values() if t not in self.label_set]
            if missing:
                raise SchemaError(
                    f"subtask {self.event}/{self.id}: merge targets {missing} "
                    "not in the merged label set"
                )


# Event -> (sentence-classification ids, slot-filling ids). This is the
# canonical subtask taxonomy; the registry golden test pins it.
_TAXONOMY = {
    "tested_positive": (
        ("gender", "relation"),
        ("who", "age", "recent-visit", "when", "where", "employer", "close-contact"),
    ),
    "tested_negative": (
        ("gender", "relation"),
        ("who", "age", "when", "where", "duration", "close-contact"),
    ),
    "can_not_test": (("relation", "symptoms"), ("who", "when", "where")),
    "death": (("relation", "symptoms"), ("who", "age", "when", "where")),
    "cure": (("opinion",), ("what-cure", "who-promoting-cure")),
}

_SENTENCE_LABEL_SETS = {
    "gender": ("Male", "Female", "Others/Not Specified"),
    "relation": ("Yes", "No"),
    "symptoms": ("Yes", "No"),
    "opinion": ("effective", "no cure", "not effective", "no opinion"),
}


class SubtaskRegistry:
    """Lookup table of :class:`SubtaskSpec` keyed by (event, subtask id)."""

    def __init__(self, specs: Iterable[SubtaskSpec]):
        self._specs: dict[tuple[str, str], SubtaskSpec] = {}
        for spec in specs:
            if spec.event not in EVENTS:
                raise SchemaError(f"unknown event {spec.event!r}")
            key = (spec.event, spec.id)
            if key in self._specs:
                raise SchemaError(f"duplicate subtask {spec.event}/{spec.id}")
            self._specs[key] = spec

    def __iter__(self):
        return iter(self._specs.values())

    def __len__(self):
        return len(self._specs)

    def __contains__(self, key: tuple[str, str]):
        return key in self._specs

    def get(self, event: str, subtask_id: str) -> SubtaskSpec:
        try:
            return self._specs[(event, subtask_id)]
        except KeyError:
            raise SchemaError(f"unknown subtask {event}/{subtask_id}") from None

    def for_event(self, event: str, kind: str | None = None) -> tuple[SubtaskSpec, ...]:
        if event not in EVENTS:
            raise SchemaError(f"unknown event {event!r}")
        specs = [s for s in self._specs.values() if s.event == event]
        if kind is not None:
            specs = [s for s in specs if s.kind == kind]
        return tuple(specs)

    def slot_ids(self, event: str) -> tuple[str, ...]:
        return tuple(s.id for s in self.for_event(event, SLOT_FILLING))

    def sentence_ids(self, event: str) -> tuple[str, ...]:
        return tuple(s.id for s in self.for_event(event, SENTENCE_CLASSIFICATION))


def _merged_label_set(base: tuple[str, ...], merge: Mapping[str, str]) -> tuple[str, ...]:
    merged = []
    for label in base:
        label = merge.get(label, label)
        if label not in merged:
            merged.append(label)
    return tuple(merged)


def default_registry(label_merges: Mapping[str, Mapping[str, str]] | None = None) -> SubtaskRegistry:
    """Build the canonical subtask registry.

    ``label_merges`` optionally maps ``"<event>.<subtask_id>"`` to an
    old-label -> merged-label mapping for sentence subtasks. Merges are
    configuration, not code: the defaults ship empty.
    """
    label_merges = label_merges or {}
    specs = []
    for event, (sentence_ids, slot_ids) in _TAXONOMY.items():
        for sid in sentence_ids:
            merge = label_merges.get(f"{event}.{sid}")
            label_set = _SENTENCE_LABEL_SETS[sid]
            if merge:
                label_set = _merged_label_set(label_set, merge)
            specs.append(
                SubtaskSpec(sid, event, SENTENCE_CLASSIFICATION, label_set,
                            dict(merge) if merge else None)
            )
        for sid in slot_ids:
            specs.append(SubtaskSpec(sid, event, SLOT_FILLING, SLOT_LABELS))
    unknown = set(label_merges) - {
        f"{e}.{sid}" for e, (sent, _) in _TAXONOMY.items() for sid in sent
    }
    if unknown:
        raise SchemaError(f"label merges reference unknown sentence subtasks: {sorted(unknown)}")
    return SubtaskRegistry(specs)


@dataclass(frozen=True)
class Tweet:
    tweet_id: str
    text: str = ""


@dataclass(frozen=True)
class AnnotatedExample:
    """A tweet plus its event label and per-subtask gold annotations."""

    tweet: Tweet
    event: str
    event_label: int
    slot_gold: dict[str, set[str]] = field(default_factory=dict)
    sentence_gold: dict[str, str] = field(default_factory=dict)

    @property
    def tweet_id(self) -> str:
        return self.tweet.tweet_id


@dataclass(frozen=True)
class SplitAssignment:
    seed: int
    train_ids: frozenset[str]
    valid_ids: frozenset[str]


def _example_from_record(record: dict, registry: SubtaskRegistry, line: int) -> AnnotatedExample:
    for key in ("tweet_id", "event", "event_label"):
        if key not in record:
            raise ParseError(f"missing field {key!r}", line=line)
    event = record["event"]
    if event not in EVENTS:
        raise SchemaError(f"line {line}: unknown event {event!r}")
    event_label = record["event_label"]
    if event_label not in (0, 1):
        raise SchemaError(f"line {line}: event_label must be 0 or 1, got {event_label!r}")

    slot_gold: dict[str, set[str]] = {}
    for sid, texts in (record.get("slot_gold") or {}).items():
        spec = registry.get(event, sid)  # raises SchemaError for unknown ids
        if spec.kind != SLOT_FILLING:
            raise SchemaError(f"line {line}: {event}/{sid} is not a slot-filling subtask")
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            raise ParseError(f"slot_gold[{sid!r}] must be a list of strings", line=line)
        slot_gold[sid] = set(texts)

    sentence_gold: dict[str, str] = {}
    for sid, label in (record.get("sentence_gold") or {}).items():
        spec = registry.get(event, sid)
        if spec.kind != SENTENCE_CLASSIFICATION:
            raise SchemaError(f"line {line}: {event}/{sid} is not a sentence subtask")
        if not isinstance(label, str):
            raise ParseError(f"sentence_gold[{sid!r}] must be a string", line=line)
        sentence_gold[sid] = label

    tweet = Tweet(str(record["tweet_id"]), record.get("text") or "")
    return AnnotatedExample(tweet, event, event_label, slot_gold, sentence_gold)


def load_corpus(path, format: str = "jsonl", registry: SubtaskRegistry | None = None) -> list[AnnotatedExample]:
    """Load annotated examples from a JSONL corpus file, in file order.

    Raises :class:`ParseError` (naming the line) for malformed lines and
    :class:`SchemaError` for records that violate the data model.
    """
    if format != "jsonl":
        raise SchemaError(f"unsupported corpus format {format!r}")
    registry = registry or default_registry()
    examples: list[AnnotatedExample] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(record, dict):
                raise ParseError("record must be a JSON object", line=lineno)
            example = _example_from_record(record, registry, lineno)
            if example.tweet_id in seen_ids:
                raise SchemaError(f"line {lineno}: duplicate tweet_id {example.tweet_id!r}")
            seen_ids.add(example.tweet_id)
            examples.append(example)
    return examples


def example_to_record(example: AnnotatedExample) -> dict:
    record = {
        "tweet_id": example.tweet_id,
        "event": example.event,
        "event_label": example.event_label,
        "slot_gold": {sid: sorted(texts) for sid, texts in sorted(example.slot_gold.items())},
        "sentence_gold": {sid: example.sentence_gold[sid] for sid in sorted(example.sentence_gold)},
    }
    if example.tweet.text:
        record["text"] = example.tweet.text
    return record


def save_corpus(examples: Iterable[AnnotatedExample], path) -> None:
    """Write examples as canonical JSONL: sorted keys, sorted gold lists,
    compact separators. save(load(f)) is the canonical form of f."""
    with open(path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example_to_record(example), sort_keys=True,
                                separators=(",", ":"), ensure_ascii=False))
            fh.write("\n")


def hydrate(examples: list[AnnotatedExample], fetcher) -> tuple[list[AnnotatedExample], list[str]]:
    """Fill in tweet text through ``fetcher.resolve(tweet_id)``.

    Examples that already carry text are kept as-is. Examples whose id the
    fetcher resolves to ``None`` (NOT_FOUND) are dropped; the second return
    value lists the dropped ids. A fetcher transport failure propagates as
    :class:`~tweetevents.errors.TransportError` and drops nothing. Output
    order follows input order regardless of fetch order.
    """
    hydrated: list[AnnotatedExample] = []
    dropped: list[str] = []
    for example in examples:
        if example.tweet.text:
            hydrated.append(example)
            continue
        text = fetcher.resolve(example.tweet_id)
        if text is None:
            dropped.append(example.tweet_id)
        else:
            hydrated.append(replace(example, tweet=Tweet(example.tweet_id, text)))
    return hydrated, dropped


def filter_no_consensus(examples: Iterable[AnnotatedExample]) -> list[AnnotatedExample]:
    """Drop NO_CONSENSUS sentence labels per-subtask; keep the example for
    its other annotations. An example left with no sentence labels and no
    slot annotations at all is dropped. Idempotent.
    """
    kept: list[AnnotatedExample] = []
    for example in examples:
        sentence_gold = {sid: lab for sid, lab in example.sentence_gold.items()
                         if lab != NO_CONSENSUS}
        if not sentence_gold and not example.slot_gold:
            continue
        kept.append(replace(example, sentence_gold=sentence_gold))
    return kept


def apply_label_merge(examples: Iterable[AnnotatedExample], registry: SubtaskRegistry) -> list[AnnotatedExample]:
    """Rewrite sentence gold labels through each subtask's label merge map.

    Identity when a subtask has no merge map. A gold label that is neither
    in the map's domain nor already in the (merged) label set is a
    :class:`SchemaError`. NO_CONSENSUS passes through untouched.
    """
    out: list[AnnotatedExample] = []
    for example in examples:
        sentence_gold = {}
        for sid, label in example.sentence_gold.items():
            if label == NO_CONSENSUS:
                sentence_gold[sid] = label
                continue
            spec = registry.get(example.event, sid)
            merge = spec.label_merge_map or {}
            if label in merge:
                label = merge[label]
            elif label not in spec.label_set:
                raise SchemaError(
                    f"tweet {example.tweet_id}: label {label!r} for "
                    f"{example.event}/{sid} is outside the label set and the merge map"
                )
            sentence_gold[sid] = label
        out.append(replace(example, sentence_gold=sentence_gold))
    return out


def split(examples: list[AnnotatedExample], seed: int, train_fraction: float = 0.70) -> SplitAssignment:
    """Deterministic per-event stratified split.

    Each event's examples are shuffled with a seed derived from
    ``(seed, event)`` and the first ``floor(train_fraction * n)`` go to
    train, the remainder to valid.
    """
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    by_event: dict[str, list[str]] = {}
    for example in examples:
        by_event.setdefault(example.event, []).append(example.tweet_id)
    train_ids: set[str] = set()
    valid_ids: set[str] = set()
    for event in sorted(by_event):
        ids = by_event[event]
        if len(ids) < 2:
            raise ValueError(f"event {event}: need at least 2 examples to split, got {len(ids)}")
        rng = random.Random(f"{seed}:{event}")
        shuffled = ids[:]
        rng.shuffle(shuffled)
        n_train = math.floor(train_fraction * len(shuffled))
        train_ids.update(shuffled[:n_train])
        valid_ids.update(shuffled[n_train:])
    return SplitAssignment(seed, frozenset(train_ids), frozenset(valid_ids))
