#!/usr/bin/env node
/**
 * embed-export: encode corpus texts and write an EMB1 vector file.
 *
 * Flags mirror the manifest fields; --data DIR is shorthand for the two
 * standard corpus files inside a dataset directory.
 */

import * as path from "node:path";

import { DEFAULT_ENCODER, EncoderLoadError } from "./encoder.js";
import { ExportManifest, runExport } from "./export.js";

const USAGE = `usage: embed-export --out FILE [options]

options:
  --data DIR          dataset directory (reads documents.jsonl and queries.jsonl)
  --documents FILE    documents JSONL (fields id, title, body)
  --queries FILE      queries JSONL (fields id, text, optional context)
  --id-field NAME     id field name in the inputs (default: id)
  --encoder ID        encoder id (default: ${DEFAULT_ENCODER})
                      "transformers:<model>" needs @xenova/transformers installed;
                      "hash:<dim>[:<seed>]" is the deterministic offline encoder
  --batch-size N      encoding batch size (default: 32)
  --out FILE          output EMB1 path (required)
`;

function parseArgs(argv: string[]): ExportManifest {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--help" || arg === "-h") {
      process.stdout.write(USAGE);
      process.exit(0);
    }
    if (!arg.startsWith("--")) {
      throw new Error(`unexpected argument: ${arg}`);
    }
    const value = argv[++i];
    if (value === undefined) {
      throw new Error(`missing value for ${arg}`);
    }
    values.set(arg.slice(2), value);
  }
  const out = values.get("out");
  if (!out) {
    throw new Error("--out is required");
  }
  const manifest: ExportManifest = { outputPath: out };
  const data = values.get("data");
  if (data) {
    manifest.documentsPath = path.join(data, "documents.jsonl");
    manifest.queriesPath = path.join(data, "queries.jsonl");
  }
  if (values.has("documents")) manifest.documentsPath = values.get("documents");
  if (values.has("queries")) manifest.queriesPath = values.get("queries");
  if (values.has("id-field")) manifest.idField = values.get("id-field");
  if (values.has("encoder")) manifest.encoder = values.get("encoder");
  if (values.has("batch-size")) {
    const n = Number(values.get("batch-size"));
    if (!Number.isInteger(n) || n < 1) {
      throw new Error(`--batch-size must be a positive integer, got ${values.get("batch-size")}`);
    }
    manifest.batchSize = n;
  }
  if (!manifest.documentsPath && !manifest.queriesPath) {
    throw new Error("nothing to export: give --data, --documents or --queries");
  }
  return manifest;
}

async function main(): Promise<number> {
  let manifest: ExportManifest;
  try {
    manifest = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`embed-export: ${(err as Error).message}\n${USAGE}`);
    return 1;
  }
  try {
    const result = await runExport(manifest);
    process.stdout.write(
      `wrote ${result.count} vectors of dim ${result.dim} to ${result.outputPath}\n`,
    );
    for (const warning of result.warnings) {
      process.stderr.write(`warning: ${warning}\n`);
    }
    if (result.warningsPath) {
      process.stderr.write(`warnings logged to ${result.warningsPath}\n`);
    }
    return 0;
  } catch (err) {
    if (err instanceof EncoderLoadError) {
      process.stderr.write(`embed-export: ${err.message}\n`);
      return 3;
    }
    process.stderr.write(`embed-export: ${(err as Error).message}\n`);
    return 2;
  }
}

main().then((code) => {
  process.exitCode = code;
});
