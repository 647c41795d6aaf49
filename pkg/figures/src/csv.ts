// Strict parsing for experiment-result CSVs and bound-overlay CSVs. The
// producer writes a fixed column order with no quoting, so any deviation is
// rejected by name rather than guessed at.

export class SchemaError extends Error {
  readonly column: string;

  constructor(column: string, message: string) {
    super(message);
    this.column = column;
  }
}

export interface ResultRow {
  sweep: number;
  rep: number;
  agent: string;
  t: number;
  instRegret: number;
  cumRegret: number;
  instReward?: number;
  cumReward?: number;
  g?: number[];
  inC?: number;
}

export interface ResultTable {
  rows: ResultRow[];
  hasReward: boolean;
  numG: number;
}

const BASE_COLUMNS = ["sweep", "rep", "agent", "t", "inst_regret", "cum_regret"];
const REWARD_COLUMNS = ["inst_reward", "cum_reward"];

const FLOAT_RE = /^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/;
const INT_RE = /^[+-]?\d+$/;

function parseFloatStrict(raw: string, column: string, line: number): number {
  if (!FLOAT_RE.test(raw)) {
    throw new SchemaError(
      column,
      `column '${column}' has non-numeric value '${raw}' on line ${line}`,
    );
  }
  return Number(raw);
}

function parseIntStrict(raw: string, column: string, line: number): number {
  if (!INT_RE.test(raw)) {
    throw new SchemaError(
      column,
      `column '${column}' has non-integer value '${raw}' on line ${line}`,
    );
  }
  return Number(raw);
}

function splitLines(text: string): string[] {
  const lines = text.split("\n");
  if (lines.length > 0 && lines[lines.length - 1] === "") lines.pop();
  return lines;
}

/** Validate the header against the fixed column order; returns the layout. */
function checkHeader(cells: string[]): { hasReward: boolean; numG: number } {
  for (let i = 0; i < BASE_COLUMNS.length; i++) {
    const want = BASE_COLUMNS[i]!;
    if (i >= cells.length) {
      throw new SchemaError(want, `missing required column '${want}'`);
    }
    if (cells[i] !== want) {
      throw new SchemaError(
        want,
        `expected column '${want}' at position ${i + 1}, found '${cells[i]}'`,
      );
    }
  }
  let pos = BASE_COLUMNS.length;
  let hasReward = false;
  if (cells[pos] === REWARD_COLUMNS[0]) {
    const wantNext = REWARD_COLUMNS[1]!;
    if (cells[pos + 1] !== wantNext) {
      throw new SchemaError(
        wantNext,
        `expected column '${wantNext}' after 'inst_reward', found '${cells[pos + 1] ?? ""}'`,
      );
    }
    hasReward = true;
    pos += 2;
  }
  let numG = 0;
  while (pos < cells.length && cells[pos] === `G_${numG}`) {
    numG += 1;
    pos += 1;
  }
  if (numG > 0) {
    if (cells[pos] !== "in_C") {
      throw new SchemaError(
        "in_C",
        `expected column 'in_C' after 'G_${numG - 1}', found '${cells[pos] ?? ""}'`,
      );
    }
    pos += 1;
  }
  if (pos < cells.length) {
    throw new SchemaError(cells[pos]!, `unexpected column '${cells[pos]}'`);
  }
  return { hasReward, numG };
}

export function parseResultCsv(text: string): ResultTable {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaError("sweep", "empty file; missing required column 'sweep'");
  }
  const layout = checkHeader(lines[0]!.split(","));
  const width = 6 + (layout.hasReward ? 2 : 0) + (layout.numG > 0 ? layout.numG + 1 : 0);
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    const lineNo = i + 1;
    if (cells.length !== width) {
      throw new SchemaError(
        "sweep",
        `line ${lineNo} has ${cells.length} fields, expected ${width}`,
      );
    }
    const row: ResultRow = {
      sweep: parseFloatStrict(cells[0]!, "sweep", lineNo),
      rep: parseIntStrict(cells[1]!, "rep", lineNo),
      agent: cells[2]!,
      t: parseIntStrict(cells[3]!, "t", lineNo),
      instRegret: parseFloatStrict(cells[4]!, "inst_regret", lineNo),
      cumRegret: parseFloatStrict(cells[5]!, "cum_regret", lineNo),
    };
    let pos = 6;
    if (layout.hasReward) {
      row.instReward = parseFloatStrict(cells[pos]!, "inst_reward", lineNo);
      row.cumReward = parseFloatStrict(cells[pos + 1]!, "cum_reward", lineNo);
      pos += 2;
    }
    if (layout.numG > 0) {
      const g: number[] = [];
      for (let s = 0; s < layout.numG; s++) {
        g.push(parseFloatStrict(cells[pos + s]!, `G_${s}`, lineNo));
      }
      row.g = g;
      row.inC = parseIntStrict(cells[pos + layout.numG]!, "in_C", lineNo);
      pos += layout.numG + 1;
    }
    rows.push(row);
  }
  return { rows, hasReward: layout.hasReward, numG: layout.numG };
}

export interface BoundPoint {
  x: number;
  bound: number;
}

export interface BoundTable {
  param: string;
  points: BoundPoint[];
}

export function parseBoundCsv(text: string): BoundTable {
  const lines = splitLines(text);
  if (lines.length === 0) {
    throw new SchemaError("bound", "empty file; missing required column 'bound'");
  }
  const header = lines[0]!.split(",");
  if (header.length !== 2 || header[1] !== "bound") {
    throw new SchemaError(
      "bound",
      `bound overlay needs a '<param>,bound' header, found '${lines[0]}'`,
    );
  }
  const param = header[0]!;
  const points: BoundPoint[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i]!.split(",");
    const lineNo = i + 1;
    if (cells.length !== 2) {
      throw new SchemaError("bound", `line ${lineNo} has ${cells.length} fields, expected 2`);
    }
    points.push({
      x: parseFloatStrict(cells[0]!, param, lineNo),
      bound: parseFloatStrict(cells[1]!, "bound", lineNo),
    });
  }
  return { param, points };
}
