import { readFileSync } from "fs";
import { globSync } from "glob";
import { parse } from "papaparse";

export interface RunRow {
  t: number;
  algo: string;
  seed: number;
  cumRegret: number;
  ratioMax: number;
  ratioMean: number;
}

export interface StatRow {
  bucket: number;
  count: number;
  mean: number;
  variance: number;
  metric: string;
  dumpId: string;
}

export const RUN_COLUMNS = [
  "t", "algo", "seed", "reward", "opt_value", "inst_regret", "cum_regret",
  "seq_len", "ratio_max", "ratio_mean", "beta", "flags",
];

export const STAT_COLUMNS = ["bucket", "count", "mean", "variance", "metric", "dump_id"];

function parseRows(path: string): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const parsed = parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const err = parsed.errors[0];
    throw new Error(`${path}: ${err.message} (row ${err.row})`);
  }
  return parsed.data;
}

function requireColumns(path: string, rows: Record<string, string>[], required: string[]): void {
  if (rows.length === 0) {
    throw new Error(`${path}: no data rows`);
  }
  const have = new Set(Object.keys(rows[0]));
  for (const col of required) {
    if (!have.has(col)) {
      throw new Error(`${path}: missing column "${col}"`);
    }
  }
}

function finite(path: string, row: number, col: string, raw: string): number {
  const v = Number(raw);
  if (!Number.isFinite(v)) {
    throw new Error(`${path}: row ${row}: column "${col}" is not a number (${raw})`);
  }
  return v;
}

export function readRunCsv(path: string): RunRow[] {
  const rows = parseRows(path);
  requireColumns(path, rows, RUN_COLUMNS);
  return rows.map((r, i) => ({
    t: finite(path, i + 1, "t", r.t),
    algo: r.algo,
    seed: finite(path, i + 1, "seed", r.seed),
    cumRegret: finite(path, i + 1, "cum_regret", r.cum_regret),
    ratioMax: Number(r.ratio_max),
    ratioMean: Number(r.ratio_mean),
  }));
}

export function readStatsCsv(path: string): StatRow[] {
  const rows = parseRows(path);
  requireColumns(path, rows, STAT_COLUMNS);
  return rows.map((r, i) => ({
    bucket: finite(path, i + 1, "bucket", r.bucket),
    count: finite(path, i + 1, "count", r.count),
    mean: finite(path, i + 1, "mean", r.mean),
    variance: finite(path, i + 1, "variance", r.variance),
    metric: r.metric,
    dumpId: r.dump_id,
  }));
}

export function expandGlob(pattern: string): string[] {
  const paths = globSync(pattern).sort();
  if (paths.length === 0) {
    throw new Error(`no files match "${pattern}"`);
  }
  return paths;
}
