import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { encodeEmb1, readEmb1, writeEmb1 } from "../src/emb1.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "emb1-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

const records = [
  { id: "doc1", vector: Float32Array.from([1, 0, 0]) },
  { id: "qéry", vector: Float32Array.from([0.5, -0.25, 0.125]) },
  { id: "ctx::geo::seattle", vector: Float32Array.from([0, 0, 0]) },
];

describe("emb1", () => {
  it("round-trips records bit-exactly", () => {
    const file = path.join(dir, "v.emb1");
    writeEmb1(file, 3, records);
    const loaded = readEmb1(file);
    expect(loaded.dim).toBe(3);
    expect(loaded.records.map((r) => r.id)).toEqual(records.map((r) => r.id));
    for (let i = 0; i < records.length; i++) {
      expect(Array.from(loaded.records[i].vector)).toEqual(Array.from(records[i].vector));
    }
  });

  it("writes the exact header layout", () => {
    const buf = encodeEmb1(2, [{ id: "ab", vector: Float32Array.from([1, 2]) }]);
    expect(buf.subarray(0, 4).toString("ascii")).toBe("EMB1");
    expect(buf.readUInt32LE(4)).toBe(2); // dim
    expect(buf.readUInt32LE(8)).toBe(1); // count
    expect(buf.readUInt16LE(12)).toBe(2); // id byte length
    expect(buf.subarray(14, 16).toString("utf-8")).toBe("ab");
    expect(buf.readFloatLE(16)).toBe(1);
    expect(buf.readFloatLE(20)).toBe(2);
    expect(buf.length).toBe(12 + 2 + 2 + 8);
  });

  it("rejects duplicate ids", () => {
    expect(() =>
      encodeEmb1(1, [
        { id: "x", vector: Float32Array.from([1]) },
        { id: "x", vector: Float32Array.from([2]) },
      ]),
    ).toThrow(/duplicate id/);
  });

  it("rejects dim mismatches", () => {
    expect(() => encodeEmb1(3, [{ id: "x", vector: Float32Array.from([1]) }])).toThrow(/dim/);
  });

  it("detects bad magic and truncation on read", () => {
    const file = path.join(dir, "v.emb1");
    writeEmb1(file, 3, records);
    const data = fs.readFileSync(file);

    const bad = path.join(dir, "bad.emb1");
    fs.writeFileSync(bad, Buffer.concat([Buffer.from("NOPE"), data.subarray(4)]));
    expect(() => readEmb1(bad)).toThrow(/unrecognized format/);

    const short = path.join(dir, "short.emb1");
    fs.writeFileSync(short, data.subarray(0, data.length - 5));
    expect(() => readEmb1(short)).toThrow(/truncated/);

    const long = path.join(dir, "long.emb1");
    fs.writeFileSync(long, Buffer.concat([data, Buffer.from([1, 2, 3])]));
    expect(() => readEmb1(long)).toThrow(/trailing/);
  });

  it("leaves no temp file behind after writing", () => {
    const file = path.join(dir, "v.emb1");
    writeEmb1(file, 3, records);
    const names = fs.readdirSync(dir);
    expect(names).toEqual(["v.emb1"]);
  });
});
