// Figure assembly and SVG rendering. Everything here is a pure function of
// the parsed tables and the figure options, so rerendering the same inputs
// yields identical bytes.

import { BoundTable, ResultTable, SchemaError } from "./csv.js";
import { aggregate, AggregateRow, exactSum, ValueField } from "./aggregate.js";

export const FIGURE_KINDS = ["sweep-sigma0", "sweep-L", "reward-curve", "regret-curve"] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export class FigureError extends Error {}

export interface Series {
  label: string;
  x: number[];
  mean: number[];
  stderr: number[];
  reps: number[];
}

export interface Overlay {
  x: number[];
  value: number[];
  scaled: number[];
  scale: number;
}

export interface FigureData {
  kind: FigureKind;
  series: Series[];
  overlay: Overlay | null;
}

export function isSweepKind(kind: FigureKind): boolean {
  return kind === "sweep-sigma0" || kind === "sweep-L";
}

// Spreading a large array into Math.max overflows the call stack, and the
// result tables can hold millions of rows.
function arrayMax(values: number[]): number {
  let out = -Infinity;
  for (const v of values) {
    if (v > out) out = v;
  }
  return out;
}

function arrayMin(values: number[]): number {
  let out = Infinity;
  for (const v of values) {
    if (v < out) out = v;
  }
  return out;
}

function valueField(kind: FigureKind, table: ResultTable): ValueField {
  if (kind === "reward-curve") {
    if (!table.hasReward) {
      throw new SchemaError(
        "cum_reward",
        "column 'cum_reward' is required for reward-curve figures",
      );
    }
    return "cumReward";
  }
  return "cumRegret";
}

function toSeries(rows: AggregateRow[], label: string, xOf: (r: AggregateRow) => number): Series {
  const sorted = [...rows].sort((a, b) => xOf(a) - xOf(b));
  return {
    label,
    x: sorted.map(xOf),
    mean: sorted.map((r) => r.mean),
    stderr: sorted.map((r) => r.stderr),
    reps: sorted.map((r) => r.reps),
  };
}

export function buildFigureData(
  kind: FigureKind,
  table: ResultTable,
  bound: BoundTable | null,
  scaleSpec: "auto" | number,
): FigureData {
  if (table.rows.length === 0) {
    throw new FigureError("result CSV has no data rows");
  }
  const field = valueField(kind, table);
  const all = aggregate(table.rows, field);

  let series: Series[];
  if (isSweepKind(kind)) {
    const finalT = arrayMax(table.rows.map((r) => r.t));
    const finals = all.filter((r) => r.t === finalT);
    const agents = [...new Set(finals.map((r) => r.agent))].sort();
    series = agents.map((agent) =>
      toSeries(
        finals.filter((r) => r.agent === agent),
        agent,
        (r) => r.sweep,
      ),
    );
  } else {
    const sweeps = [...new Set(all.map((r) => r.sweep))];
    const agents = [...new Set(all.map((r) => r.agent))].sort();
    series = [];
    for (const agent of agents) {
      for (const sweep of sweeps.sort((a, b) => a - b)) {
        const rows = all.filter((r) => r.agent === agent && r.sweep === sweep);
        if (rows.length === 0) continue;
        const label = sweeps.length > 1 ? `${agent} (sweep=${sweep})` : agent;
        series.push(toSeries(rows, label, (r) => r.t));
      }
    }
  }

  let overlay: Overlay | null = null;
  if (bound !== null) {
    if (!isSweepKind(kind)) {
      throw new FigureError("a bound overlay requires a sweep figure kind");
    }
    const points = [...bound.points].sort((a, b) => a.x - b.x);
    let scale: number;
    if (scaleSpec === "auto") {
      const xMax = arrayMax(series.flatMap((s) => s.x));
      const at = points.find((p) => p.x === xMax);
      if (at === undefined) {
        throw new FigureError(
          `bound overlay has no point at the largest sweep value ${xMax}`,
        );
      }
      if (at.bound === 0) {
        throw new FigureError("bound is zero at the largest sweep value; cannot auto-scale");
      }
      const finals = series
        .map((s) => (s.x[s.x.length - 1] === xMax ? s.mean[s.mean.length - 1]! : null))
        .filter((v): v is number => v !== null);
      if (finals.length === 0) {
        throw new FigureError("no series reaches the largest sweep value");
      }
      scale = exactSum(finals) / finals.length / at.bound;
    } else {
      scale = scaleSpec;
    }
    overlay = {
      x: points.map((p) => p.x),
      value: points.map((p) => p.bound),
      scaled: points.map((p) => p.bound * scale),
      scale,
    };
  }

  return { kind, series, overlay };
}

// --- SVG rendering -----------------------------------------------------------

const WIDTH = 720;
const HEIGHT = 480;
const MARGIN = { left: 76, right: 28, top: 44, bottom: 58 };
const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
  "#bcbd22",
  "#17becf",
];

function niceNum(range: number, round: boolean): number {
  const exp = Math.floor(Math.log10(range));
  const f = range / 10 ** exp;
  let nf: number;
  if (round) nf = f < 1.5 ? 1 : f < 3 ? 2 : f < 7 ? 5 : 10;
  else nf = f <= 1 ? 1 : f <= 2 ? 2 : f <= 5 ? 5 : 10;
  return nf * 10 ** exp;
}

function linearTicks(lo: number, hi: number, target = 6): number[] {
  if (lo === hi) return [lo];
  const step = niceNum(niceNum(hi - lo, false) / (target - 1), true);
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e5 || a < 1e-3) {
    return v
      .toExponential(2)
      .replace(/\.?0+e/, "e")
      .replace("e+", "e");
  }
  return String(Number(v.toPrecision(6)));
}

function formatScale(v: number): string {
  return String(Number(v.toPrecision(4)));
}

function escapeXml(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function px(v: number): string {
  return v.toFixed(2);
}

interface Scale {
  (v: number): number;
  ticks: number[];
  domain: [number, number];
}

function makeScale(
  values: number[],
  range: [number, number],
  log: boolean,
  tickHints: number[] | null,
): Scale {
  let lo = arrayMin(values);
  let hi = arrayMax(values);
  if (log) {
    lo = Math.log10(lo);
    hi = Math.log10(hi);
  }
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const pad = 0.04 * (hi - lo);
  lo -= pad;
  hi += pad;
  const f = (v: number): number => {
    const t = ((log ? Math.log10(v) : v) - lo) / (hi - lo);
    return range[0] + t * (range[1] - range[0]);
  };
  const ticks = tickHints ?? linearTicks(lo, hi);
  return Object.assign(f, { ticks, domain: [lo, hi] as [number, number] });
}

const X_LABEL: Record<FigureKind, string> = {
  "sweep-sigma0": "sigma0",
  "sweep-L": "L",
  "reward-curve": "t",
  "regret-curve": "t",
};

const Y_LABEL: Record<FigureKind, string> = {
  "sweep-sigma0": "mean final cumulative regret",
  "sweep-L": "mean final cumulative regret",
  "reward-curve": "mean cumulative reward",
  "regret-curve": "mean cumulative regret",
};

export function renderSvg(data: FigureData): string {
  const { kind, series, overlay } = data;
  const sweep = isSweepKind(kind);
  const xs = series.flatMap((s) => s.x).concat(overlay ? overlay.x : []);
  const ys = series
    .flatMap((s) => s.mean.map((m, i) => [m - s.stderr[i]!, m + s.stderr[i]!]).flat())
    .concat(overlay ? overlay.scaled : []);
  const logX = kind === "sweep-sigma0" && xs.every((v) => v > 0);

  const xRange: [number, number] = [MARGIN.left, WIDTH - MARGIN.right];
  const yRange: [number, number] = [HEIGHT - MARGIN.bottom, MARGIN.top];
  // sweep figures put a tick at every swept value; curves use rounded ticks
  const xHints = sweep ? [...new Set(xs)].sort((a, b) => a - b) : null;
  const sx = makeScale(xs, xRange, logX, xHints);
  const sy = makeScale(ys, yRange, false, null);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
      `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);

  // gridlines and axes
  for (const tick of sy.ticks) {
    const y = px(sy(tick));
    parts.push(
      `<line x1="${xRange[0]}" x2="${xRange[1]}" y1="${y}" y2="${y}" stroke="#dddddd"/>`,
    );
    parts.push(
      `<text x="${xRange[0] - 8}" y="${y}" dy="0.32em" text-anchor="end" font-size="12">` +
        `${formatTick(tick)}</text>`,
    );
  }
  for (const tick of sx.ticks) {
    const x = px(sx(tick));
    parts.push(
      `<line x1="${x}" x2="${x}" y1="${yRange[0]}" y2="${yRange[0] + 5}" stroke="#333333"/>`,
    );
    parts.push(
      `<text x="${x}" y="${yRange[0] + 20}" text-anchor="middle" font-size="12">` +
        `${formatTick(tick)}</text>`,
    );
  }
  parts.push(
    `<line x1="${xRange[0]}" x2="${xRange[1]}" y1="${yRange[0]}" y2="${yRange[0]}" stroke="#333333"/>`,
  );
  parts.push(
    `<line x1="${xRange[0]}" x2="${xRange[0]}" y1="${yRange[0]}" y2="${yRange[1]}" stroke="#333333"/>`,
  );
  parts.push(
    `<text x="${(xRange[0] + xRange[1]) / 2}" y="${HEIGHT - 14}" text-anchor="middle" ` +
      `font-size="14">${escapeXml(X_LABEL[kind])}</text>`,
  );
  parts.push(
    `<text x="20" y="${(yRange[0] + yRange[1]) / 2}" text-anchor="middle" font-size="14" ` +
      `transform="rotate(-90 20 ${(yRange[0] + yRange[1]) / 2})">${escapeXml(Y_LABEL[kind])}</text>`,
  );

  // series
  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length]!;
    const pts = s.x.map((v, i) => [sx(v), sy(s.mean[i]!)] as const);
    if (!sweep) {
      const upper = s.x.map((v, i) => `${px(sx(v))},${px(sy(s.mean[i]! + s.stderr[i]!))}`);
      const lower = s.x
        .map((v, i) => `${px(sx(v))},${px(sy(s.mean[i]! - s.stderr[i]!))}`)
        .reverse();
      parts.push(
        `<polygon points="${upper.concat(lower).join(" ")}" fill="${color}" ` +
          `fill-opacity="0.18" stroke="none"/>`,
      );
    }
    parts.push(
      `<polyline points="${pts.map(([x, y]) => `${px(x)},${px(y)}`).join(" ")}" ` +
        `fill="none" stroke="${color}" stroke-width="1.8"/>`,
    );
    if (sweep) {
      s.x.forEach((v, i) => {
        const x = sx(v);
        const yLo = sy(s.mean[i]! - s.stderr[i]!);
        const yHi = sy(s.mean[i]! + s.stderr[i]!);
        parts.push(
          `<line x1="${px(x)}" x2="${px(x)}" y1="${px(yLo)}" y2="${px(yHi)}" ` +
            `stroke="${color}" stroke-width="1.2"/>`,
        );
        for (const yc of [yLo, yHi]) {
          parts.push(
            `<line x1="${px(x - 4)}" x2="${px(x + 4)}" y1="${px(yc)}" y2="${px(yc)}" ` +
              `stroke="${color}" stroke-width="1.2"/>`,
          );
        }
        parts.push(`<circle cx="${px(x)}" cy="${px(sy(s.mean[i]!))}" r="3" fill="${color}"/>`);
      });
    }
  });

  if (overlay !== null) {
    const pts = overlay.x.map((v, i) => `${px(sx(v))},${px(sy(overlay.scaled[i]!))}`);
    parts.push(
      `<polyline points="${pts.join(" ")}" fill="none" stroke="#444444" ` +
        `stroke-width="1.6" stroke-dasharray="6 4"/>`,
    );
  }

  // legend
  const entries = series
    .map((s, idx) => ({ label: s.label, color: PALETTE[idx % PALETTE.length]!, dash: false }))
    .concat(
      overlay !== null
        ? [{ label: `bound (x${formatScale(overlay.scale)})`, color: "#444444", dash: true }]
        : [],
    );
  const legendWidth = Math.max(...entries.map((e) => e.label.length)) * 7 + 40;
  const legendX = WIDTH - MARGIN.right - legendWidth - 6;
  const legendY = MARGIN.top + 6;
  parts.push(
    `<rect x="${legendX}" y="${legendY}" width="${legendWidth}" height="${entries.length * 18 + 10}" ` +
      `fill="white" fill-opacity="0.85" stroke="#999999"/>`,
  );
  entries.forEach((e, i) => {
    const y = legendY + 14 + i * 18;
    parts.push(
      `<line x1="${legendX + 8}" x2="${legendX + 28}" y1="${y}" y2="${y}" stroke="${e.color}" ` +
        `stroke-width="2"${e.dash ? ' stroke-dasharray="6 4"' : ""}/>`,
    );
    parts.push(
      `<text x="${legendX + 34}" y="${y}" dy="0.32em" font-size="12">${escapeXml(e.label)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
