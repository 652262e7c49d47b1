"""Command-line front door: reproducible runs driven by one config file.

Commands compose the library modules into on-disk artifacts under the
configured output directory. Every artifact embeds the config fingerprint
(a hash of all hyperparameters), and evaluate/predict refuse artifacts
whose fingerprint disagrees with the active config.

Exit codes:
  0  success
  2  configuration errors: bad config file, unknown keys or values,
     unknown event, family or ablation name, bad command arguments
  3  data errors: missing or malformed input files, schema violations,
     hydration drops above the ceiling, empty training splits
  4  model-artifact errors: an artifact carries a different config
     fingerprint than the active run
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

from .chunker import PrecomputedChunker, RuleChunker, load_precomputed
from .corpus import (EVENTS, SplitAssignment, Tweet, apply_label_merge,
                     default_registry, filter_no_consensus, hydrate, load_corpus,
                     save_corpus, split)
from .errors import (AlignmentError, ChunkerError, ConfigError,
                     FingerprintMismatchError, ParseError, SchemaError,
                     TransportError, ValidationError)
from .fetchers import BEARER_TOKEN_ENV, CachedFileFetcher, TwitterApiFetcher
from .pipeline import (ABLATIONS, FAMILIES, ThresholdTable, TrainConfig, evaluate,
                       ablation_matrix, load_checkpoint, predict, save_checkpoint,
                       train, tune_thresholds, write_predictions)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_MODEL = 4

# Run-level keys and their defaults; TrainConfig fields are additional
# valid keys. The config document is flat: one JSON object, no sections.
RUN_KEYS: dict = {
    "corpus": None,            # raw annotation JSONL (prepare input)
    "texts": None,             # local tweet-text cache for offline hydration
    "chunks": None,            # precomputed candidate-chunk file (optional)
    "output_dir": "out",
    "events": list(EVENTS),
    "train_fraction": 0.70,
    "hydration_drop_ceiling": 0,
    "label_merges": {},        # "<event>.<subtask>" -> {old label: merged label}
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    corpus: str | None
    texts: str | None
    chunks: str | None
    output_dir: str
    events: tuple[str, ...]
    train_fraction: float
    hydration_drop_ceiling: int
    label_merges: dict
    train: TrainConfig


def load_run_config(path: str | None, overrides: list[str]) -> RunConfig:
    """Merge defaults, the config document and ``key=value`` overrides.

    Override values parse as JSON when possible and fall back to plain
    strings, so ``--set seed=3`` yields an integer and ``--set
    corpus=data/x.jsonl`` a path."""
    values = dict(RUN_KEYS)
    train_fields = {f.name: f.default for f in dataclasses.fields(TrainConfig)}
    values.update(train_fields)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                document = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc.msg}") from exc
        if not isinstance(document, dict):
            raise ConfigError(f"config file {path} must hold one JSON object")
        for key, value in document.items():
            if key not in values:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = value
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        if key not in values:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = json.loads(raw)
        except json.JSONDecodeError:
            values[key] = raw

    try:
        train_config = TrainConfig(**{name: values[name] for name in train_fields})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    events = tuple(values["events"])
    for event in events:
        if event not in EVENTS:
            raise ConfigError(f"unknown event {event!r}; valid events: {', '.join(EVENTS)}")
    if not events:
        raise ConfigError("config key 'events' must name at least one event")
    return RunConfig(
        corpus=values["corpus"], texts=values["texts"], chunks=values["chunks"],
        output_dir=str(values["output_dir"]), events=events,
        train_fraction=float(values["train_fraction"]),
        hydration_drop_ceiling=int(values["hydration_drop_ceiling"]),
        label_merges=dict(values["label_merges"] or {}), train=train_config)


# --------------------------------------------------------------------------
# Shared plumbing

def _registry(config: RunConfig):
    return default_registry(config.label_merges or None)


def _chunker(config: RunConfig):
    if config.chunks:
        return PrecomputedChunker(load_precomputed(config.chunks))
    return RuleChunker()


def _out(config: RunConfig, name: str) -> Path:
    return Path(config.output_dir) / name


def _write_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, separators=(",", ":"),
                               ensure_ascii=False) + "\n", encoding="utf-8")


def _build_fetcher(config: RunConfig):
    if config.texts:
        return CachedFileFetcher(config.texts)
    if os.environ.get(BEARER_TOKEN_ENV):
        return TwitterApiFetcher()
    raise ConfigError(
        "corpus has tweets without text: set config key 'texts' to a local "
        f"text cache or export {BEARER_TOKEN_ENV} for API hydration")


def _load_prepared(config: RunConfig):
    registry = _registry(config)
    examples = load_corpus(_out(config, "prepared.jsonl"), registry=registry)
    manifest = json.loads(_out(config, "split.json").read_text(encoding="utf-8"))
    assignment = SplitAssignment(manifest["seed"], frozenset(manifest["train_ids"]),
                                 frozenset(manifest["valid_ids"]))
    return examples, assignment


def _check_event(event: str) -> None:
    if event not in EVENTS:
        raise ConfigError(f"unknown event {event!r}; valid events: {', '.join(EVENTS)}")


def _checkpoint_path(base: Path, family: str, event: str) -> Path:
    return base / f"{family}.{event}.pt"


def _thresholds_path(base: Path, event: str) -> Path:
    return base / f"thresholds.{event}.json"


def _write_thresholds(table: ThresholdTable, fingerprint: str, path: Path) -> None:
    _write_json({"fingerprint": fingerprint,
                 "thresholds": json.loads(table.to_json())}, path)


def _read_thresholds(path: Path, expected_fingerprint: str) -> ThresholdTable:
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("fingerprint") != expected_fingerprint:
        raise FingerprintMismatchError(
            f"threshold table {path} was produced under config "
            f"{payload.get('fingerprint')}, expected {expected_fingerprint}")
    return ThresholdTable.from_json(json.dumps(payload["thresholds"]))


def _read_tweet_file(path) -> list[tuple[Tweet, str]]:
    pairs: list[tuple[Tweet, str]] = []
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
            for field in ("tweet_id", "text", "event"):
                if field not in record:
                    raise ParseError(f"missing field {field!r}", line=lineno)
            if record["event"] not in EVENTS:
                raise SchemaError(f"line {lineno}: unknown event {record['event']!r}")
            if not str(record["text"]).strip():
                raise ParseError("empty text", line=lineno)
            pairs.append((Tweet(str(record["tweet_id"]), record["text"]),
                          record["event"]))
    return pairs


# --------------------------------------------------------------------------
# Commands

def cmd_prepare(args, config: RunConfig) -> int:
    if not config.corpus:
        raise ConfigError("config key 'corpus' is required for prepare")
    registry = _registry(config)
    examples = load_corpus(config.corpus, registry=registry)
    dropped: list[str] = []
    if any(not ex.tweet.text for ex in examples):
        examples, dropped = hydrate(examples, _build_fetcher(config))
    if len(dropped) > config.hydration_drop_ceiling:
        raise ValidationError(
            f"hydration dropped {len(dropped)} tweets, above the ceiling "
            f"{config.hydration_drop_ceiling}")
    examples = filter_no_consensus(examples)
    examples = apply_label_merge(examples, registry)
    assignment = split(examples, config.train.seed, config.train_fraction)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_corpus(examples, _out(config, "prepared.jsonl"))
    counts = Counter(ex.event for ex in examples)
    manifest = {
        "fingerprint": config.train.fingerprint(),
        "seed": config.train.seed,
        "train_fraction": config.train_fraction,
        "events": {event: counts[event] for event in sorted(counts)},
        "dropped": sorted(dropped),
        "train_ids": sorted(assignment.train_ids),
        "valid_ids": sorted(assignment.valid_ids),
    }
    _write_json(manifest, _out(config, "split.json"))
    for event in sorted(counts):
        print(f"{event}: {counts[event]} examples")
    print(f"prepared {len(examples)} examples "
          f"({len(assignment.train_ids)} train / {len(assignment.valid_ids)} valid), "
          f"{len(dropped)} dropped in hydration")
    return EXIT_OK


def cmd_train(args, config: RunConfig) -> int:
    _check_event(args.event)
    examples, assignment = _load_prepared(config)
    subset = [ex for ex in examples if ex.event == args.event]
    if not subset:
        raise ValidationError(f"prepared corpus has no examples for event {args.event}")
    result = train(args.family, subset, assignment, config.train,
                   _registry(config), _chunker(config))
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = _checkpoint_path(out, args.family, args.event)
    save_checkpoint(result, path)
    _write_json({"fingerprint": result.fingerprint, "log": result.log},
                out / f"{args.family}.{args.event}.log.json")
    final = f", final loss {result.log[-1]['loss']:.4f}" if result.log else ""
    print(f"trained {args.family}/{args.event}: {len(result.log)} epochs{final}")
    print(f"checkpoint written to {path}")
    return EXIT_OK


def cmd_tune_thresholds(args, config: RunConfig) -> int:
    _check_event(args.event)
    examples, assignment = _load_prepared(config)
    out = Path(config.output_dir)
    result = load_checkpoint(_checkpoint_path(out, "slot", args.event),
                             _registry(config),
                             expected_fingerprint=config.train.fingerprint())
    valid = [ex for ex in examples
             if ex.event == args.event and ex.tweet_id in assignment.valid_ids]
    table = tune_thresholds(result, valid, _registry(config), _chunker(config))
    path = _thresholds_path(out, args.event)
    _write_thresholds(table, result.fingerprint, path)
    for (event, sid), value in sorted(table.values.items()):
        print(f"{event}/{sid}: {value:.1f}")
    print(f"thresholds written to {path}")
    return EXIT_OK


def cmd_evaluate(args, config: RunConfig) -> int:
    examples, assignment = _load_prepared(config)
    registry = _registry(config)
    out = Path(config.output_dir)
    expected = config.train.fingerprint()
    results = []
    merged: dict = {}
    for event in config.events:
        for family in FAMILIES:
            results.append(load_checkpoint(_checkpoint_path(out, family, event),
                                           registry, expected_fingerprint=expected))
        merged.update(_read_thresholds(_thresholds_path(out, event), expected).values)
    ids = assignment.valid_ids if args.split == "valid" else assignment.train_ids
    subset = [ex for ex in examples
              if ex.tweet_id in ids and ex.event in config.events]
    report = evaluate(subset, results, ThresholdTable(merged), registry,
                      _chunker(config))
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    (out / "report.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    print(f"report written to {out / 'report.json'}")
    return EXIT_OK


def cmd_predict(args, config: RunConfig) -> int:
    pairs = _read_tweet_file(args.input)
    registry = _registry(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    output = Path(args.output) if args.output else out / "predictions.jsonl"
    expected = config.train.fingerprint()
    if not pairs:
        write_predictions([], output)
        _write_json({"fingerprint": expected, "records": 0},
                    output.with_suffix(".meta.json"))
        print(f"0 predictions written to {output}")
        return EXIT_OK
    events_needed = sorted({event for _, event in pairs})
    models = {}
    merged: dict = {}
    for event in events_needed:
        models[event] = {family: load_checkpoint(
            _checkpoint_path(out, family, event), registry,
            expected_fingerprint=expected) for family in FAMILIES}
        merged.update(_read_thresholds(_thresholds_path(out, event), expected).values)
    records = predict(models, ThresholdTable(merged), pairs, registry,
                      _chunker(config))
    write_predictions(records, output)
    _write_json({"fingerprint": expected, "records": len(records)},
                output.with_suffix(".meta.json"))
    print(f"{len(records)} predictions written to {output}")
    return EXIT_OK


def cmd_ablation(args, config: RunConfig) -> int:
    if args.list:
        for name in sorted(ABLATIONS):
            family, overrides = ABLATIONS[name]
            changed = ", ".join(f"{k}={v}" for k, v in sorted(overrides.items()))
            print(f"{name:<22} [{family}] {changed or 'defaults'}")
        return EXIT_OK
    if not args.names:
        raise ConfigError("name at least one ablation (or use --list)")
    specs = ablation_matrix(args.names, config.train)
    examples, assignment = _load_prepared(config)
    registry = _registry(config)
    chunker = _chunker(config)
    summary = {}
    for spec in specs:
        subdir = _out(config, "ablation") / spec.name
        subdir.mkdir(parents=True, exist_ok=True)
        families = FAMILIES if spec.family == "both" else (spec.family,)
        results = []
        merged: dict = {}
        for event in config.events:
            subset = [ex for ex in examples if ex.event == event]
            if not subset:
                raise ValidationError(f"prepared corpus has no examples for event {event}")
            for family in families:
                result = train(family, subset, assignment, spec.config,
                               registry, chunker)
                save_checkpoint(result, _checkpoint_path(subdir, family, event))
                results.append(result)
                if family == "slot":
                    valid = [ex for ex in subset
                             if ex.tweet_id in assignment.valid_ids]
                    table = tune_thresholds(result, valid, registry, chunker)
                    merged.update(table.values)
                    _write_thresholds(table, result.fingerprint,
                                      _thresholds_path(subdir, event))
        thresholds = ThresholdTable(merged) if merged else None
        valid_examples = [ex for ex in examples
                          if ex.tweet_id in assignment.valid_ids
                          and ex.event in config.events]
        report = evaluate(valid_examples, results, thresholds, registry, chunker)
        (subdir / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
        (subdir / "report.txt").write_text(report.to_text(), encoding="utf-8")
        micro_f1 = report.overall["micro"]["f1"]
        macro_f1 = report.overall["macro_f1"]
        summary[spec.name] = {"fingerprint": report.fingerprint,
                              "micro_f1": micro_f1, "macro_f1": macro_f1}
        print(f"{spec.name:<22} micro F1 {micro_f1:.3f}  macro F1 {macro_f1:.3f}")
    _write_json(summary, _out(config, "ablation") / "summary.json")
    return EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing

def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tweetevents",
        description="Extract structured event information from tweets: "
                    "train, tune, evaluate and run the two model families.",
        epilog="exit codes: 0 success, 2 config error, 3 data error, "
               "4 model-artifact error")
    parser.add_argument("--config", metavar="PATH",
                        help="flat JSON config document (one object)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key; repeatable")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="hydrate, filter and split the raw corpus")
    p.set_defaults(handler=cmd_prepare)

    p = sub.add_parser("train", help="train one model family for one event")
    p.add_argument("--family", required=True, choices=FAMILIES)
    p.add_argument("--event", required=True)
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("tune-thresholds",
                       help="grid-search slot decision thresholds on the valid split")
    p.add_argument("--event", required=True)
    p.set_defaults(handler=cmd_tune_thresholds)

    p = sub.add_parser("evaluate",
                       help="score the configured events and write the report")
    p.add_argument("--split", choices=("train", "valid"), default="valid")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("predict", help="run end-to-end inference over a tweet file")
    p.add_argument("--input", required=True,
                   help="JSONL of {tweet_id, text, event} records")
    p.add_argument("--output", help="prediction file (default: <output_dir>/predictions.jsonl)")
    p.set_defaults(handler=cmd_predict)

    p = sub.add_parser("ablation", help="train and score named model variants")
    p.add_argument("names", nargs="*", help="catalogue names (see --list)")
    p.add_argument("--list", action="store_true", help="print the catalogue and exit")
    p.set_defaults(handler=cmd_ablation)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (None, 0) else int(exc.code)
    try:
        config = load_run_config(args.config, args.set)
        return args.handler(args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FingerprintMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (ParseError, SchemaError, ValidationError, AlignmentError,
            ChunkerError, TransportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
