"""Open up the two model families and look at each moving part.

Slot filling: pooled span -> per-subtask binary head, plus an event MLP
on CLS whose logits pass through a shared fusion MLP and are added to
every subtask's logits. Sentence classification: per-subtask attention
over the whole sequence, with the event MLP's 50-dim hidden state
concatenated before each affine head.
"""

import math

import torch

from tweetevents.chunker import CandidateChunk
from tweetevents.corpus import Tweet, default_registry
from tweetevents.encoder import EncoderConfig, build_encoder
from tweetevents.preprocess import insert_markers, normalize_sentence
from tweetevents.sentence_model import SentenceClassificationModel, sentence_loss
from tweetevents.slot_model import SlotFillingModel, slot_loss

torch.manual_seed(0)
registry = default_registry()
encoder = build_encoder(EncoderConfig())  # tiny test encoder: 2 layers, dim 32

tweet = Tweet("demo", "My cousin Alice tested positive in Seattle on Monday")
start = tweet.text.index("Alice")
marked = insert_markers(tweet, CandidateChunk(start, start + 5, "Alice"))

print("slot-filling model")
print("=" * 72)
slot_ids = registry.slot_ids("tested_positive")
model = SlotFillingModel(encoder, slot_ids, seed=0).eval()
with torch.no_grad():
    output = model([marked])
print(f"  subtasks      : {', '.join(slot_ids)}")
print(f"  event logits  : {output.event_logits[0].tolist()}")
for sid in slot_ids[:3]:
    prob = output.positive_probability(sid)[0].item()
    print(f"  P({sid!r} answered by 'Alice') = {prob:.3f}")

# The span attention is a distribution over the marked span only.
with torch.no_grad():
    hidden = encoder.encode(list(marked.tokens), (marked.p, marked.q))
    p, q = hidden.marker_indices
    span = hidden.vectors[p:q + 1]
    weights = torch.softmax(span @ model.attention["who"].a, dim=0)
print(f"  'who' span attention over {q - p + 1} positions: "
      f"{[round(w, 3) for w in weights.tolist()]} (sum {weights.sum():.6f})")

# With all head parameters at zero every logit is uniform, so the joint
# loss collapses to its closed form: (n subtasks + 1 event) * ln 2.
with torch.no_grad():
    for name, parameter in model.named_parameters():
        if not name.startswith("encoder."):
            parameter.zero_()
    uniform = model([marked])
labels = {sid: torch.tensor([1 if sid == "who" else 0]) for sid in slot_ids}
loss = slot_loss(uniform, torch.tensor([1]), labels)
print(f"  uniform-logit loss = {loss.item():.6f}  "
      f"(closed form {(len(slot_ids) + 1) * math.log(2):.6f})")

print()
print("sentence-classification model")
print("=" * 72)
labels_by_sid = {sid: registry.get("tested_positive", sid).label_set
                 for sid in registry.sentence_ids("tested_positive")}
sentence = SentenceClassificationModel(encoder, labels_by_sid, seed=0).eval()
tokens = normalize_sentence(tweet.text).split()
with torch.no_grad():
    output = sentence([tokens])
for sid, label_set in labels_by_sid.items():
    k = output.subtask_logits[sid].shape[-1]
    predicted = sentence.label_for(sid, int(output.predictions(sid)[0]))
    print(f"  {sid}: {k}-way over {label_set} -> {predicted!r}")
print(f"  classifier input dim = encoder {encoder.hidden_dim} "
      f"+ event feature {sentence.classifiers['gender'].W.shape[0] - encoder.hidden_dim}")

with torch.no_grad():
    for name, parameter in sentence.named_parameters():
        if not name.startswith("encoder."):
            parameter.zero_()
    uniform = sentence([tokens])
gold = {sid: torch.tensor([0]) for sid in labels_by_sid}
loss = sentence_loss(uniform, torch.tensor([1]), gold)
closed = math.log(2) + sum(math.log(len(s)) for s in labels_by_sid.values())
print(f"  uniform-logit loss = {loss.item():.6f}  (closed form {closed:.6f})")
