"""The motivating scenario: the same query ranked for different user
contexts surfaces different documents.

    python demos/04_personalized_ranking.py
"""

from ctxrank import SynthSpec, TrainConfig, gen_synthetic, train
from ctxrank.experiment import rank_query
from ctxrank.features import FeatureExtractor

ds = gen_synthetic(SynthSpec(n_queries=60, docs_per_query=20, context_strength=1.0, seed=5))
extractor = FeatureExtractor(ds)
model, _ = train(ds, extractor, TrainConfig(epochs=12, seed=0))

query = next(q for q in ds.queries if "benefits" in q.text)
print(f"query: {query.text!r}\n")

for context in (query.context, None):
    label = f"context={context}" if context else "no context"
    print(label)
    for i, hit in enumerate(rank_query(model, ds, extractor, query.text, context, top_n=5), 1):
        print(f"  {i}. {hit.doc_id}  score={hit.score:+.3f}  {hit.title!r}")
    print()

print("with context, documents carrying the user's geo and job tokens move to the top")
