"""Inspect the feature vector: BM25, embedding cosine, and the per-attribute
context-document scores.

    python demos/02_features_and_scores.py
"""

import numpy as np

from ctxrank import SynthSpec, gen_synthetic
from ctxrank.features import FeatureExtractor, MASKS

ds = gen_synthetic(SynthSpec(n_queries=30, docs_per_query=12, seed=3))
extractor = FeatureExtractor(ds)
schema = extractor.schema
print(f"feature schema ({schema.total_dim} dims): {schema.feature_names()}")

query = next(q for q in ds.queries if q.context)
group = ds.judgments_by_query()[query.id]
print(f"\nquery {query.id}: {query.text!r} context={query.context}\n")

print(f"{'label':>5}  {'bm25_title':>10}  {'bm25_body':>9}  {'sem':>6}  context features")
for j in sorted(group, key=lambda j: -j.label)[:8]:
    vec = extractor.assemble(query, ds.doc(j.doc_id), MASKS["full"])
    ctx = np.round(vec[8:], 3)
    print(f"{j.label:>5}  {vec[3]:>10.3f}  {vec[4]:>9.3f}  {vec[5]:>6.3f}  {ctx}")

print("\nwith the no_context mask the same rows lose exactly the context block:")
vec_full = extractor.assemble(query, ds.doc(group[0].doc_id), MASKS["full"])
vec_off = extractor.assemble(query, ds.doc(group[0].doc_id), MASKS["no_context"])
print("  full    :", np.round(vec_full, 3))
print("  masked  :", np.round(vec_off, 3))
