/**
 * Round-trip acceptance: a file produced by this exporter must load in the
 * consuming ranking engine with matching dim, every input id resolvable and
 * unit self-similarity for non-zero vectors. The check is executed against
 * the engine itself through a python subprocess, which is the actual
 * consumption path in production.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { collectItems, runExport } from "../src/export.js";

const VERIFY_SCRIPT = `
import json, sys
from ctxrank.embedding import load_embeddings, cosine

store = load_embeddings(sys.argv[1])
wanted = json.loads(sys.argv[2])
missing = [i for i in wanted if i not in store.entries]
worst_self = 1.0
zero = 0
for key, vec in store.entries.items():
    c = cosine(vec, vec)
    if c == 0.0:
        zero += 1
    else:
        worst_self = min(worst_self, c)
print(json.dumps({
    "dim": store.dim,
    "count": len(store.entries),
    "missing": missing,
    "worst_self_cosine": worst_self,
    "zero_vectors": zero,
}))
`;

let dir: string;

beforeAll(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "emb-acc-"));
});

afterAll(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("exporter round trip into the ranking engine", () => {
  it("loads with matching dim, resolvable ids and unit self-similarity", async () => {
    const documents = Array.from({ length: 12 }, (_, i) => ({
      id: `doc${i}`,
      title: `title words ${i}`,
      body: `body content number ${i} benefits seattle`,
    }));
    documents.push({ id: "doc-empty", title: "", body: "" });
    const queries = [
      { id: "q1", text: "find benefits", context: { geo: "seattle", job_family: "engineer" } },
      { id: "q2", text: "payroll question", context: { geo: "tokyo" } },
    ];
    const docsPath = path.join(dir, "documents.jsonl");
    const queriesPath = path.join(dir, "queries.jsonl");
    fs.writeFileSync(docsPath, documents.map((d) => JSON.stringify(d)).join("\n") + "\n");
    fs.writeFileSync(queriesPath, queries.map((q) => JSON.stringify(q)).join("\n") + "\n");

    const manifest = {
      documentsPath: docsPath,
      queriesPath,
      outputPath: path.join(dir, "vectors.emb1"),
      encoder: "hash:48",
    };
    const result = await runExport(manifest);
    const ids = collectItems(manifest).map((item) => item.id);

    const stdout = execFileSync(
      "python3",
      ["-c", VERIFY_SCRIPT, result.outputPath, JSON.stringify(ids)],
      { encoding: "utf-8" },
    );
    const verdict = JSON.parse(stdout);
    const ok =
      verdict.dim === 48 &&
      verdict.missing.length === 0 &&
      Math.abs(verdict.worst_self_cosine - 1.0) <= 1e-6 &&
      verdict.zero_vectors === 1; // only the empty document
    console.log(
      `[${ok ? "PASS" : "FAIL"}] exporter round-trip (dim ${verdict.dim}, ` +
        `${verdict.count} ids, worst self-cosine ${verdict.worst_self_cosine})`,
    );
    expect(verdict.dim).toBe(48);
    expect(verdict.count).toBe(ids.length);
    expect(verdict.missing).toEqual([]);
    expect(Math.abs(verdict.worst_self_cosine - 1.0)).toBeLessThanOrEqual(1e-6);
    expect(verdict.zero_vectors).toBe(1);
  }, 30000);
});
