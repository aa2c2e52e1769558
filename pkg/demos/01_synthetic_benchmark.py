"""Build a synthetic benchmark with planted context-dependent relevance.

Every query group contains documents that match the query topic; the grade
3 vs 1 distinction exists only in which context tokens (geo, job family)
the document carries, so a ranker without context signal cannot separate
them. Run:

    python demos/01_synthetic_benchmark.py
"""

from collections import Counter

from ctxrank import SynthSpec, gen_synthetic, planted_label, save_dataset, split_train_test

spec = SynthSpec(n_queries=50, docs_per_query=20, context_strength=1.0, seed=7)
ds = gen_synthetic(spec)
print(f"generated {len(ds.queries)} queries, {len(ds.documents)} docs, {len(ds.judgments)} judgments")

grades = Counter(j.label for j in ds.judgments)
print("grade distribution:", dict(sorted(grades.items(), reverse=True)))

query = ds.queries[0]
print(f"\nexample query {query.id}: {query.text!r} context={query.context}")
for j in ds.judgments_by_query()[query.id][:6]:
    doc = ds.doc(j.doc_id)
    print(f"  label {j.label}: title={doc.title!r} body={doc.body!r}")

# the grades are exactly recoverable from the text, nothing is hidden state
violations = sum(
    1 for j in ds.judgments if planted_label(ds.query(j.query_id), ds.doc(j.doc_id)) != j.label
)
print(f"\nplanted-rule violations: {violations} of {len(ds.judgments)}")

train, test = split_train_test(ds, 0.8, seed=0)
print(f"80/20 split by query group: {len(train.queries)} train / {len(test.queries)} test")

save_dataset(ds, "demo_output/synth")
print("dataset written to demo_output/synth/")
