/**
 * EMB1 binary vector file format (little-endian throughout):
 *
 *   magic "EMB1" | u32 dim | u32 count |
 *   count x { u16 idByteLength | id UTF-8 | dim x f32 }
 *
 * The reader is included so round trips can be validated without the
 * consuming engine.
 */

import * as fs from "node:fs";
import * as path from "node:path";

const MAGIC = Buffer.from("EMB1", "ascii");

export interface Emb1Record {
  id: string;
  vector: Float32Array;
}

export function encodeEmb1(dim: number, records: Emb1Record[]): Buffer {
  const header = Buffer.alloc(12);
  MAGIC.copy(header, 0);
  header.writeUInt32LE(dim, 4);
  header.writeUInt32LE(records.length, 8);
  const parts: Buffer[] = [header];
  const seen = new Set<string>();
  for (const record of records) {
    if (record.vector.length !== dim) {
      throw new Error(`vector for ${record.id} has dim ${record.vector.length}, header says ${dim}`);
    }
    if (seen.has(record.id)) {
      throw new Error(`duplicate id: ${record.id}`);
    }
    seen.add(record.id);
    const idBytes = Buffer.from(record.id, "utf-8");
    if (idBytes.length > 0xffff) {
      throw new Error(`id too long for EMB1 record: ${record.id.slice(0, 40)}...`);
    }
    const lenBuf = Buffer.alloc(2);
    lenBuf.writeUInt16LE(idBytes.length, 0);
    const vecBuf = Buffer.alloc(4 * dim);
    for (let i = 0; i < dim; i++) {
      vecBuf.writeFloatLE(record.vector[i], 4 * i);
    }
    parts.push(lenBuf, idBytes, vecBuf);
  }
  return Buffer.concat(parts);
}

/** Write atomically: temp file in the same directory, then rename. */
export function writeEmb1(filePath: string, dim: number, records: Emb1Record[]): void {
  const data = encodeEmb1(dim, records);
  const dir = path.dirname(filePath);
  fs.mkdirSync(dir, { recursive: true });
  const tmp = path.join(dir, `.${path.basename(filePath)}.tmp-${process.pid}`);
  fs.writeFileSync(tmp, data);
  fs.renameSync(tmp, filePath);
}

export function readEmb1(filePath: string): { dim: number; records: Emb1Record[] } {
  const data = fs.readFileSync(filePath);
  if (data.length < 12 || !data.subarray(0, 4).equals(MAGIC)) {
    throw new Error(`unrecognized format: bad magic in ${filePath}`);
  }
  const dim = data.readUInt32LE(4);
  const count = data.readUInt32LE(8);
  const records: Emb1Record[] = [];
  let offset = 12;
  for (let r = 0; r < count; r++) {
    if (offset + 2 > data.length) {
      throw new Error(`truncated file: ${count} records declared, ${records.length} present`);
    }
    const idLen = data.readUInt16LE(offset);
    offset += 2;
    if (offset + idLen + 4 * dim > data.length) {
      throw new Error(`truncated file: ${count} records declared, ${records.length} present`);
    }
    const id = data.subarray(offset, offset + idLen).toString("utf-8");
    offset += idLen;
    const vector = new Float32Array(dim);
    for (let i = 0; i < dim; i++) {
      vector[i] = data.readFloatLE(offset + 4 * i);
    }
    offset += 4 * dim;
    records.push({ id, vector });
  }
  if (offset !== data.length) {
    throw new Error(`${data.length - offset} trailing bytes after ${count} records`);
  }
  return { dim, records };
}
