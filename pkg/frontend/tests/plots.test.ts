import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";
import { monotonicityScore, renderDdmc } from "../src/plotDdmc";
import { renderRatio } from "../src/plotRatio";
import { legendOrder, renderRegret } from "../src/plotRegret";
import { StatRow } from "../src/csv";

const RUN_HEADER = "t,algo,seed,reward,opt_value,inst_regret,cum_regret,seq_len,ratio_max,ratio_mean,beta,flags";

function runDir(): string {
  const dir = mkdtempSync(join(tmpdir(), "plots-"));
  const mk = (algo: string, seed: number, regrets: number[], ratios = false) => {
    const rows = regrets.map((r, i) => {
      const ratio = ratios ? `${2.0 - i * 0.1},${1.5 - i * 0.1}` : "nan,nan";
      return `${i + 1},${algo},${seed},0.0,1.0,0.0,${r},2,${ratio},nan,ok`;
    });
    writeFileSync(join(dir, `${algo}_seed${seed}.csv`), [RUN_HEADER, ...rows].join("\n") + "\n");
  };
  mk("eoful", 0, [1, 2, 3], true);
  mk("eoful", 1, [2, 3, 4], true);
  mk("misaligned_greedy", 0, [3, 6, 9]);
  mk("wrong_theta", 0, [2, 4, 6]);
  const bound = [10, 14, 17].map((v, i) => `${i + 1},bound,0,nan,nan,nan,${v},0,nan,nan,nan,bound`);
  writeFileSync(join(dir, "bound.csv"), [RUN_HEADER, ...bound].join("\n") + "\n");
  return dir;
}

describe("legendOrder", () => {
  it("pins the known series first and sorts the rest", () => {
    expect(legendOrder(["zeta", "bound", "alpha", "eoful"])).toEqual([
      "eoful",
      "bound",
      "alpha",
      "zeta",
    ]);
  });
});

describe("renderRegret", () => {
  it("draws every series and names it in the legend", () => {
    const svg = renderRegret({ pattern: join(runDir(), "*.csv"), scaleBound: 1.0 });
    expect(svg.startsWith("<svg")).toBe(true);
    for (const name of ["eoful", "wrong_theta", "misaligned_greedy", "bound"]) {
      expect(svg).toContain(`>${name}</text>`);
    }
  });

  it("is deterministic", () => {
    const dir = runDir();
    const opts = { pattern: join(dir, "*.csv"), scaleBound: 1.0 };
    expect(renderRegret(opts)).toBe(renderRegret(opts));
  });

  it("rescales the bound series only", () => {
    const dir = runDir();
    const base = renderRegret({ pattern: join(dir, "*.csv"), scaleBound: 1.0 });
    const scaled = renderRegret({ pattern: join(dir, "*.csv"), scaleBound: 0.5 });
    expect(scaled).not.toBe(base);
    expect(scaled).toContain(">bound</text>");
  });
});

describe("renderRatio", () => {
  it("draws both ratio curves and the reference line", () => {
    const svg = renderRatio({ pattern: join(runDir(), "eoful_seed0.csv"), refLine: 1.25 });
    expect(svg).toContain(">ratio_max</text>");
    expect(svg).toContain(">ratio_mean</text>");
    expect(svg).toContain("ref 1.25");
  });

  it("rejects a run where the max dips below the mean", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const path = join(dir, "bad.csv");
    writeFileSync(
      path,
      [RUN_HEADER, "1,eoful,0,0,1,0,0,2,0.5,1.5,nan,ok"].join("\n") + "\n",
    );
    expect(() => renderRatio({ pattern: path, refLine: 1.25 })).toThrow(/t=1/);
  });
});

function stat(bucket: number, mean: number, metric = "l2"): StatRow {
  return { bucket, count: 5, mean, variance: 0.01, metric, dumpId: "dump" };
}

describe("monotonicityScore", () => {
  it("counts non-increasing consecutive buckets", () => {
    expect(monotonicityScore([stat(0, 0.5), stat(1, 0.3), stat(2, 0.4)])).toBe(0.5);
    expect(monotonicityScore([stat(0, 0.5), stat(1, 0.3), stat(2, 0.1)])).toBe(1.0);
  });

  it("allows increases within the slack", () => {
    expect(monotonicityScore([stat(0, 0.5), stat(1, 0.5 + 1e-13)])).toBe(1.0);
    expect(monotonicityScore([stat(0, 0.5), stat(1, 0.5 + 1e-9)])).toBe(0.0);
  });

  it("skips gaps and is vacuously 1.0 without pairs", () => {
    expect(monotonicityScore([stat(0, 0.1), stat(2, 0.9)])).toBe(1.0);
    expect(monotonicityScore([stat(3, 0.1)])).toBe(1.0);
  });
});

describe("renderDdmc", () => {
  it("draws one panel per metric and annotates the score", () => {
    const dir = mkdtempSync(join(tmpdir(), "plots-"));
    const path = join(dir, "stats.csv");
    writeFileSync(
      path,
      "bucket,count,mean,variance,metric,dump_id\n" +
        "0,10,0.5,0.01,l2,dump\n1,8,0.3,0.0,l2,dump\n" +
        "0,10,0.8,0.02,d1,dump\n1,8,0.4,0.01,d1,dump\n",
    );
    const svg = renderDdmc({ path });
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("monotonicity 1");
    expect(svg).toContain("l2 distance");
    expect(svg).toContain("d1 distance");
  });
});
