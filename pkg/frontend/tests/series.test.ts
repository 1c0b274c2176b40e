import { describe, expect, it } from "vitest";
import { RunRow } from "../src/csv";
import { groupByAlgo, meanBand, ratioSeries } from "../src/series";

function row(algo: string, seed: number, t: number, cumRegret: number, ratioMax = NaN, ratioMean = NaN): RunRow {
  return { t, algo, seed, cumRegret, ratioMax, ratioMean };
}

describe("groupByAlgo", () => {
  it("splits by algo and seed and sorts by round", () => {
    const rows = [row("a", 0, 2, 1), row("a", 0, 1, 0.5), row("a", 1, 1, 0.2), row("b", 0, 1, 0.1)];
    const grouped = groupByAlgo(rows);
    expect([...grouped.keys()].sort()).toEqual(["a", "b"]);
    expect(grouped.get("a")!.get(0)!.map((r) => r.t)).toEqual([1, 2]);
  });
});

describe("meanBand", () => {
  it("computes pointwise mean, min, and max over seeds", () => {
    const seeds = new Map([
      [0, [row("a", 0, 1, 1), row("a", 0, 2, 3)]],
      [1, [row("a", 1, 1, 3), row("a", 1, 2, 5)]],
    ]);
    const band = meanBand("a", seeds);
    expect(band.t).toEqual([1, 2]);
    expect(band.mean).toEqual([2, 4]);
    expect(band.min).toEqual([1, 3]);
    expect(band.max).toEqual([3, 5]);
  });

  it("rejects seeds on different round grids", () => {
    const seeds = new Map([
      [0, [row("a", 0, 1, 1), row("a", 0, 2, 3)]],
      [1, [row("a", 1, 1, 3)]],
    ]);
    expect(() => meanBand("a", seeds)).toThrow(/different round grid/);
  });
});

describe("ratioSeries", () => {
  it("drops rows without finite ratios", () => {
    const rows = [row("a", 0, 1, 0), row("a", 0, 2, 0, 2.0, 1.5), row("a", 0, 3, 0, 1.8, 1.4)];
    const series = ratioSeries(rows);
    expect(series.t).toEqual([2, 3]);
    expect(series.max).toEqual([2.0, 1.8]);
  });

  it("rejects input with no finite ratios", () => {
    expect(() => ratioSeries([row("a", 0, 1, 0)])).toThrow(/no rows carry ratio values/);
  });

  it("rejects a max below the mean and names the round", () => {
    const rows = [row("a", 0, 1, 0, 2.0, 1.5), row("a", 0, 2, 0, 0.5, 1.5)];
    expect(() => ratioSeries(rows)).toThrow(/t=2/);
  });
});
