"""Compare model variants from the ablation catalogue on one corpus.

Each catalogue row overrides a base config: dropping span pooling
(classify the entity-start vector), dropping the auxiliary event task
(no fusion, no concatenated feature), or swapping the encoder. Because
initialization is seeded per parameter name, variants share identical
starting values for every parameter they have in common.
"""

from tweetevents.corpus import split
from tweetevents.pipeline import (ABLATIONS, FAMILIES, TrainConfig, ablation_matrix,
                                  evaluate, train, tune_thresholds)
from tweetevents.synthetic import make_synthetic_corpus

corpus = make_synthetic_corpus(64, seed=0)
assignment = split(corpus, seed=0)
valid_set = [ex for ex in corpus if ex.tweet_id in assignment.valid_ids]

base = TrainConfig(learning_rate=3e-3, epochs_slot=8, epochs_sentence=50,
                   max_steps=200, seed=0)
names = ["sf_full", "sf_wo_pool", "sf_wo_ces", "sc_full", "sc_wo_ces"]

print(f"{'variant':<14}{'family':<10}{'micro F1':>10}{'macro F1':>10}")
print("-" * 44)
for spec in ablation_matrix(names, base):
    families = FAMILIES if spec.family == "both" else (spec.family,)
    results, thresholds = [], None
    for family in families:
        result = train(family, corpus, assignment, spec.config)
        results.append(result)
        if family == "slot":
            thresholds = tune_thresholds(result, valid_set)
    report = evaluate(valid_set, results, thresholds)
    print(f"{spec.name:<14}{spec.family:<10}"
          f"{report.overall['micro']['f1']:>10.3f}"
          f"{report.overall['macro_f1']:>10.3f}")

print()
print("full catalogue (pretrained rows need model_id and the optional "
      "'pretrained' extra):")
for name in sorted(ABLATIONS):
    family, overrides = ABLATIONS[name]
    changed = ", ".join(f"{k}={v}" for k, v in sorted(overrides.items()))
    print(f"  {name:<22}[{family}] {changed or 'defaults'}")
