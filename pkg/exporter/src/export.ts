/**
 * Export job: read `id<TAB>text` lines, encode them with a named model in
 * batches, and write an EMB1 file plus ids sidecar with rows in input order.
 */

import { readFileSync } from "node:fs";

import { Matrix, writeEmb1 } from "./emb1.js";
import { resolveEncoder } from "./encoders.js";

export interface ExportJob {
  modelName: string;
  input: string;
  output: string;
  batchSize?: number;
  normalize?: boolean;
}

export interface ParsedCorpus {
  ids: string[];
  texts: string[];
}

export function parseCorpus(path: string): ParsedCorpus {
  const ids: string[] = [];
  const texts: string[] = [];
  const seen = new Set<string>();
  const lines = readFileSync(path, "utf-8").split("\n");
  lines.forEach((rawLine, index) => {
    const line = rawLine.endsWith("\r") ? rawLine.slice(0, -1) : rawLine;
    if (line.length === 0) return;
    const tab = line.indexOf("\t");
    if (tab <= 0) {
      throw new Error(`${path}: line ${index + 1} is not id<TAB>text`);
    }
    const id = line.slice(0, tab);
    const text = line.slice(tab + 1);
    if (text.trim().length === 0) {
      throw new Error(`${path}: empty text at line ${index + 1}`);
    }
    if (seen.has(id)) {
      throw new Error(`${path}: duplicate id ${JSON.stringify(id)} at line ${index + 1}`);
    }
    seen.add(id);
    ids.push(id);
    texts.push(text);
  });
  if (ids.length === 0) {
    throw new Error(`${path}: no input lines`);
  }
  return { ids, texts };
}

function l2Normalize(row: Float32Array): Float32Array {
  let sum = 0;
  for (const value of row) sum += value * value;
  if (sum === 0) return row;
  const inv = 1 / Math.sqrt(sum);
  const out = new Float32Array(row.length);
  for (let i = 0; i < row.length; i++) out[i] = row[i] * inv;
  return out;
}

export function runExport(job: ExportJob): Matrix {
  const encoder = resolveEncoder(job.modelName);
  const corpus = parseCorpus(job.input);
  const batchSize = job.batchSize ?? 32;
  if (batchSize < 1) {
    throw new Error(`batch size must be >= 1, got ${batchSize}`);
  }
  const rows: Float32Array[] = [];
  for (let start = 0; start < corpus.texts.length; start += batchSize) {
    const batch = corpus.texts.slice(start, start + batchSize);
    for (const row of encoder.encode(batch)) {
      rows.push(job.normalize ? l2Normalize(row) : row);
    }
  }
  const matrix: Matrix = { ids: corpus.ids, dim: encoder.dim, rows };
  writeEmb1(matrix, job.output);
  return matrix;
}
