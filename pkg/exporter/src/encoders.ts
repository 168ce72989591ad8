/**
 * Text encoders resolved by model name.
 *
 * This environment has no route to a model hub, so the registry ships a
 * deterministic signed feature-hashing encoder ("hashing-<dim>", e.g.
 * hashing-256): word and character-trigram features are hashed into a
 * fixed-width signed-count vector.  It needs no downloads, produces the
 * same bytes on every run, and gives texts sharing vocabulary a high
 * cosine similarity.
 */

export interface Encoder {
  readonly name: string;
  readonly dim: number;
  encode(texts: string[]): Float32Array[];
}

const HASHING_NAME = /^hashing-(\d+)$/;

/** 32-bit FNV-1a; stable across platforms. */
export function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

function features(text: string): string[] {
  const tokens = text.toLowerCase().split(/[^\p{L}\p{N}]+/u).filter((t) => t.length > 0);
  const result: string[] = [];
  for (const token of tokens) {
    result.push(`w:${token}`);
    const padded = `^${token}$`;
    for (let i = 0; i + 3 <= padded.length; i++) {
      result.push(`g:${padded.slice(i, i + 3)}`);
    }
  }
  return result;
}

class HashingEncoder implements Encoder {
  constructor(readonly name: string, readonly dim: number) {}

  encodeOne(text: string): Float32Array {
    const vector = new Float32Array(this.dim);
    for (const feature of features(text)) {
      const hash = fnv1a(feature);
      const bucket = hash % this.dim;
      const sign = hash >>> 31 ? -1 : 1;
      vector[bucket] += sign;
    }
    return vector;
  }

  encode(texts: string[]): Float32Array[] {
    return texts.map((t) => this.encodeOne(t));
  }
}

export function resolveEncoder(modelName: string): Encoder {
  const match = HASHING_NAME.exec(modelName);
  if (match) {
    const dim = Number(match[1]);
    if (dim < 1 || dim > 1_000_000) {
      throw new Error(`hashing encoder dimension out of range: ${dim}`);
    }
    return new HashingEncoder(modelName, dim);
  }
  throw new Error(
    `cannot load model ${JSON.stringify(modelName)}: no model hub is reachable ` +
      `from this environment; use the built-in "hashing-<dim>" family ` +
      `(for example hashing-256)`
  );
}
