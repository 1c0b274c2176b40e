import { RunRow } from "./csv";

export interface Band {
  t: number[];
  mean: number[];
  min: number[];
  max: number[];
}

export interface RatioSeries {
  t: number[];
  max: number[];
  mean: number[];
}

export function groupByAlgo(rows: RunRow[]): Map<string, Map<number, RunRow[]>> {
  const byAlgo = new Map<string, Map<number, RunRow[]>>();
  for (const row of rows) {
    let seeds = byAlgo.get(row.algo);
    if (seeds === undefined) {
      seeds = new Map();
      byAlgo.set(row.algo, seeds);
    }
    let series = seeds.get(row.seed);
    if (series === undefined) {
      series = [];
      seeds.set(row.seed, series);
    }
    series.push(row);
  }
  for (const seeds of byAlgo.values()) {
    for (const series of seeds.values()) {
      series.sort((a, b) => a.t - b.t);
    }
  }
  return byAlgo;
}

export function meanBand(algo: string, seedSeries: Map<number, RunRow[]>): Band {
  const seeds = [...seedSeries.keys()].sort((a, b) => a - b);
  const grid = seedSeries.get(seeds[0])!.map((r) => r.t);
  for (const seed of seeds) {
    const ts = seedSeries.get(seed)!.map((r) => r.t);
    if (ts.length !== grid.length || ts.some((t, i) => t !== grid[i])) {
      throw new Error(`${algo}: seed ${seed} has a different round grid`);
    }
  }
  const mean: number[] = [];
  const min: number[] = [];
  const max: number[] = [];
  for (let i = 0; i < grid.length; i++) {
    let sum = 0;
    let lo = Infinity;
    let hi = -Infinity;
    for (const seed of seeds) {
      const v = seedSeries.get(seed)![i].cumRegret;
      sum += v;
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
    mean.push(sum / seeds.length);
    min.push(lo);
    max.push(hi);
  }
  return { t: grid, mean, min, max };
}

export function ratioSeries(rows: RunRow[]): RatioSeries {
  const finite = rows.filter(
    (r) => Number.isFinite(r.ratioMax) && Number.isFinite(r.ratioMean),
  );
  if (finite.length === 0) {
    throw new Error("no rows carry ratio values");
  }
  finite.sort((a, b) => a.t - b.t);
  for (const row of finite) {
    if (row.ratioMax < row.ratioMean) {
      throw new Error(
        `ratio_max ${row.ratioMax} < ratio_mean ${row.ratioMean} at t=${row.t}`,
      );
    }
  }
  return {
    t: finite.map((r) => r.t),
    max: finite.map((r) => r.ratioMax),
    mean: finite.map((r) => r.ratioMean),
  };
}
