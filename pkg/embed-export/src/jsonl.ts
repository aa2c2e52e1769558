/** Readers for the newline-delimited corpus files. */

import * as fs from "node:fs";

export interface DocumentRow {
  id: string;
  title: string;
  body: string;
}

export interface QueryRow {
  id: string;
  text: string;
  context?: Record<string, string>;
}

function readLines(filePath: string): Array<{ lineno: number; obj: Record<string, unknown> }> {
  let text: string;
  try {
    text = fs.readFileSync(filePath, "utf-8");
  } catch (err) {
    throw new Error(`unreadable input ${filePath}: ${(err as Error).message}`);
  }
  const rows: Array<{ lineno: number; obj: Record<string, unknown> }> = [];
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    let obj: unknown;
    try {
      obj = JSON.parse(line);
    } catch (err) {
      throw new Error(`${filePath}:${i + 1}: malformed JSON (${(err as Error).message})`);
    }
    if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
      throw new Error(`${filePath}:${i + 1}: expected an object`);
    }
    rows.push({ lineno: i + 1, obj: obj as Record<string, unknown> });
  }
  return rows;
}

function requireString(
  obj: Record<string, unknown>,
  field: string,
  where: string,
): string {
  const value = obj[field];
  if (value === undefined || value === null) {
    throw new Error(`${where}: missing field "${field}"`);
  }
  return String(value);
}

export function readDocuments(filePath: string, idField = "id"): DocumentRow[] {
  return readLines(filePath).map(({ lineno, obj }) => ({
    id: requireString(obj, idField, `${filePath}:${lineno}`),
    title: String(obj["title"] ?? ""),
    body: String(obj["body"] ?? ""),
  }));
}

export function readQueries(filePath: string, idField = "id"): QueryRow[] {
  return readLines(filePath).map(({ lineno, obj }) => {
    const row: QueryRow = {
      id: requireString(obj, idField, `${filePath}:${lineno}`),
      text: String(obj["text"] ?? ""),
    };
    const context = obj["context"];
    if (context !== undefined && context !== null) {
      if (typeof context !== "object" || Array.isArray(context)) {
        throw new Error(`${filePath}:${lineno}: "context" must be an object`);
      }
      row.context = Object.fromEntries(
        Object.entries(context as Record<string, unknown>).map(([k, v]) => [k, String(v)]),
      );
    }
    return row;
  });
}
