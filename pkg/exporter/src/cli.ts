#!/usr/bin/env node
/**
 * export --model <name> --input texts.tsv --output out.emb
 *        [--batch-size N] [--normalize]
 */

import { parseArgs } from "node:util";

import { runExport } from "./export.js";

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        model: { type: "string" },
        input: { type: "string" },
        output: { type: "string" },
        "batch-size": { type: "string", default: "32" },
        normalize: { type: "boolean", default: false },
        help: { type: "boolean", default: false },
      },
      strict: true,
    }));
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
  if (values.help) {
    console.log(
      "usage: embed-exporter --model <name> --input texts.tsv --output out.emb\n" +
        "       [--batch-size N=32] [--normalize]\n\n" +
        "Encodes id<TAB>text lines into an EMB1 matrix plus .ids sidecar.\n" +
        'Built-in models: "hashing-<dim>" (deterministic feature hashing).'
    );
    return 0;
  }
  const missing = ["model", "input", "output"].filter(
    (name) => !(values as Record<string, unknown>)[name]
  );
  if (missing.length > 0) {
    console.error(`error: missing required flags: ${missing.map((m) => `--${m}`).join(", ")}`);
    return 1;
  }
  const batchSize = Number(values["batch-size"]);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    console.error(`error: --batch-size must be a positive integer`);
    return 1;
  }
  try {
    const matrix = runExport({
      modelName: values.model as string,
      input: values.input as string,
      output: values.output as string,
      batchSize,
      normalize: values.normalize as boolean,
    });
    console.log(
      `encoded ${matrix.rows.length} texts to dim ${matrix.dim} -> ${values.output}`
    );
    return 0;
  } catch (error) {
    console.error(`error: ${(error as Error).message}`);
    return 2;
  }
}

// argv[1] is this script when run via `node dist/cli.js`
import { fileURLToPath } from "node:url";
if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
