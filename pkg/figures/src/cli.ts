// CLI entry point: figures --kind <k> --in <csv> [--bound <csv>]
// [--scale auto|<float>] --out <img> [--dump-data <json>]
//
// Exit codes: 0 ok, 2 bad arguments or schema mismatch.

import { readFileSync, writeFileSync } from "node:fs";
import { parseBoundCsv, parseResultCsv, SchemaError } from "./csv.js";
import {
  buildFigureData,
  FIGURE_KINDS,
  FigureError,
  FigureKind,
  renderSvg,
} from "./figures.js";

const USAGE =
  "usage: figures --kind <sweep-sigma0|sweep-L|reward-curve|regret-curve> " +
  "--in <csv> [--bound <csv>] [--scale auto|<float>] --out <img> [--dump-data <json>]";

interface Options {
  kind: FigureKind;
  in: string;
  out: string;
  bound: string | null;
  scale: "auto" | number;
  dumpData: string | null;
}

class UsageError extends Error {}

function parseArgs(argv: string[]): Options {
  const raw = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i]!;
    if (!flag.startsWith("--")) {
      throw new UsageError(`unexpected argument '${flag}'`);
    }
    const value = argv[i + 1];
    if (value === undefined) {
      throw new UsageError(`flag '${flag}' needs a value`);
    }
    if (raw.has(flag)) {
      throw new UsageError(`flag '${flag}' given twice`);
    }
    raw.set(flag, value);
  }
  const known = ["--kind", "--in", "--out", "--bound", "--scale", "--dump-data"];
  for (const flag of raw.keys()) {
    if (!known.includes(flag)) {
      throw new UsageError(`unknown flag '${flag}'`);
    }
  }
  for (const flag of ["--kind", "--in", "--out"]) {
    if (!raw.has(flag)) {
      throw new UsageError(`missing required flag '${flag}'`);
    }
  }
  const kind = raw.get("--kind")!;
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new UsageError(`unknown figure kind '${kind}'`);
  }
  let scale: "auto" | number = "auto";
  const scaleRaw = raw.get("--scale");
  if (scaleRaw !== undefined) {
    if (scaleRaw === "auto") {
      scale = "auto";
    } else {
      const parsed = Number(scaleRaw);
      if (!Number.isFinite(parsed) || parsed <= 0) {
        throw new UsageError(`--scale needs 'auto' or a positive number, got '${scaleRaw}'`);
      }
      scale = parsed;
    }
    if (!raw.has("--bound")) {
      throw new UsageError("--scale is only meaningful together with --bound");
    }
  }
  return {
    kind: kind as FigureKind,
    in: raw.get("--in")!,
    out: raw.get("--out")!,
    bound: raw.get("--bound") ?? null,
    scale,
    dumpData: raw.get("--dump-data") ?? null,
  };
}

function readText(path: string, role: string): string {
  try {
    return readFileSync(path, "utf8");
  } catch (err) {
    throw new UsageError(`cannot read ${role} '${path}': ${(err as Error).message}`);
  }
}

export function main(argv: string[]): number {
  let options: Options;
  try {
    options = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`error: ${err.message}\n${USAGE}\n`);
      return 2;
    }
    throw err;
  }
  try {
    const table = parseResultCsv(readText(options.in, "result CSV"));
    const bound = options.bound === null ? null : parseBoundCsv(readText(options.bound, "bound CSV"));
    const data = buildFigureData(options.kind, table, bound, options.scale);
    writeFileSync(options.out, renderSvg(data));
    if (options.dumpData !== null) {
      writeFileSync(options.dumpData, JSON.stringify(data) + "\n");
    }
  } catch (err) {
    if (err instanceof SchemaError) {
      process.stderr.write(`schema mismatch: ${err.message}\n`);
      return 2;
    }
    if (err instanceof FigureError || err instanceof UsageError) {
      process.stderr.write(`error: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
  return 0;
}

process.exit(main(process.argv.slice(2)));
