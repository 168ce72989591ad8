/**
 * EMB1 binary matrix format: magic "EMB1", version byte (1), two uint32le
 * counts (rows, dim), then rows*dim float32le values in row-major order.
 * A sidecar `<path>.ids` file carries one UTF-8 id per row.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const EMB1_MAGIC = "EMB1";
export const EMB1_VERSION = 1;
export const HEADER_SIZE = 13;

export interface Matrix {
  ids: string[];
  dim: number;
  /** rows.length === ids.length, every row has length dim */
  rows: Float32Array[];
}

export function idsPath(path: string): string {
  return `${path}.ids`;
}

export function writeEmb1(matrix: Matrix, path: string): void {
  const { ids, dim, rows } = matrix;
  if (rows.length === 0 || dim === 0) {
    throw new Error("empty matrix");
  }
  if (ids.length !== rows.length) {
    throw new Error(`got ${ids.length} ids for ${rows.length} rows`);
  }
  const buffer = Buffer.alloc(HEADER_SIZE + 4 * rows.length * dim);
  buffer.write(EMB1_MAGIC, 0, "ascii");
  buffer.writeUInt8(EMB1_VERSION, 4);
  buffer.writeUInt32LE(rows.length, 5);
  buffer.writeUInt32LE(dim, 9);
  let offset = HEADER_SIZE;
  for (const row of rows) {
    if (row.length !== dim) {
      throw new Error(`row of length ${row.length}, expected ${dim}`);
    }
    for (const value of row) {
      if (!Number.isFinite(value)) {
        throw new Error("non-finite value in embedding row");
      }
      buffer.writeFloatLE(value, offset);
      offset += 4;
    }
  }
  writeFileSync(path, buffer);
  writeFileSync(idsPath(path), ids.join("\n") + "\n", "utf-8");
}

export function readEmb1(path: string): Matrix {
  const buffer = readFileSync(path);
  if (buffer.length < HEADER_SIZE) {
    throw new Error(`${path}: truncated header`);
  }
  if (buffer.toString("ascii", 0, 4) !== EMB1_MAGIC) {
    throw new Error(`${path}: bad magic`);
  }
  if (buffer.readUInt8(4) !== EMB1_VERSION) {
    throw new Error(`${path}: unsupported version`);
  }
  const n = buffer.readUInt32LE(5);
  const dim = buffer.readUInt32LE(9);
  if (buffer.length !== HEADER_SIZE + 4 * n * dim) {
    throw new Error(`${path}: payload length mismatch`);
  }
  const rows: Float32Array[] = [];
  let offset = HEADER_SIZE;
  for (let i = 0; i < n; i++) {
    const row = new Float32Array(dim);
    for (let j = 0; j < dim; j++) {
      row[j] = buffer.readFloatLE(offset);
      offset += 4;
    }
    rows.push(row);
  }
  const ids = readFileSync(idsPath(path), "utf-8").split("\n").filter((s) => s.length > 0);
  if (ids.length !== n) {
    throw new Error(`${idsPath(path)}: expected ${n} ids, found ${ids.length}`);
  }
  return { ids, dim, rows };
}
