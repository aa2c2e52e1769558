/**
 * Export pipeline: read corpus files, encode one text per unique id, write
 * EMB1. Documents are encoded as title+body, queries as their text, and
 * every context attribute value under the id "ctx::<attr>::<value>".
 * Vectors are L2-normalized so downstream cosine reduces to a dot product.
 */

import * as fs from "node:fs";

import { Encoder, l2Normalize, loadEncoder } from "./encoder.js";
import { Emb1Record, writeEmb1 } from "./emb1.js";
import { readDocuments, readQueries } from "./jsonl.js";

export interface ExportManifest {
  documentsPath?: string;
  queriesPath?: string;
  idField?: string;
  encoder?: string;
  outputPath: string;
  batchSize?: number;
}

export interface ExportResult {
  outputPath: string;
  dim: number;
  count: number;
  warnings: string[];
  warningsPath?: string;
}

interface Item {
  id: string;
  text: string;
}

export function collectItems(manifest: ExportManifest): Item[] {
  const items: Item[] = [];
  const seen = new Map<string, string>();

  const push = (id: string, text: string, source: string) => {
    const existing = seen.get(id);
    if (existing !== undefined) {
      if (id.startsWith("ctx::")) {
        // the same attribute value may occur on many queries
        return;
      }
      throw new Error(`duplicate id across inputs: ${id} (${existing} and ${source})`);
    }
    seen.set(id, source);
    items.push({ id, text });
  };

  if (manifest.documentsPath) {
    for (const doc of readDocuments(manifest.documentsPath, manifest.idField)) {
      push(doc.id, `${doc.title} ${doc.body}`.trim(), manifest.documentsPath);
    }
  }
  if (manifest.queriesPath) {
    for (const query of readQueries(manifest.queriesPath, manifest.idField)) {
      push(query.id, query.text, manifest.queriesPath);
      for (const [attr, value] of Object.entries(query.context ?? {})) {
        push(`ctx::${attr}::${value}`, value, manifest.queriesPath);
      }
    }
  }
  if (items.length === 0) {
    throw new Error("nothing to export: no documents or queries given");
  }
  return items;
}

export async function runExport(
  manifest: ExportManifest,
  encoder?: Encoder,
): Promise<ExportResult> {
  const enc = encoder ?? (await loadEncoder(manifest.encoder));
  const items = collectItems(manifest);
  const batchSize = manifest.batchSize && manifest.batchSize > 0 ? manifest.batchSize : 32;

  const warnings: string[] = [];
  const records: Emb1Record[] = [];
  for (let start = 0; start < items.length; start += batchSize) {
    const batch = items.slice(start, start + batchSize);
    const vectors = await enc.encode(batch.map((item) => item.text));
    for (let i = 0; i < batch.length; i++) {
      let vector = vectors[i];
      if (vector.length !== enc.dim) {
        throw new Error(`encoder returned dim ${vector.length}, expected ${enc.dim}`);
      }
      let norm = 0;
      for (const v of vector) norm += v * v;
      if (norm === 0) {
        warnings.push(`${batch[i].id}: empty or token-free text, wrote a zero vector`);
      } else {
        vector = l2Normalize(vector);
      }
      records.push({ id: batch[i].id, vector });
    }
  }

  writeEmb1(manifest.outputPath, enc.dim, records);
  let warningsPath: string | undefined;
  if (warnings.length > 0) {
    warningsPath = `${manifest.outputPath}.warnings.log`;
    fs.writeFileSync(warningsPath, warnings.join("\n") + "\n", "utf-8");
  }
  return {
    outputPath: manifest.outputPath,
    dim: enc.dim,
    count: records.length,
    warnings,
    warningsPath,
  };
}
