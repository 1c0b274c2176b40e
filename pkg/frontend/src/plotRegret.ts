import { RunRow, expandGlob, readRunCsv } from "./csv";
import { Band, groupByAlgo, meanBand } from "./series";
import { bandPath, frame, line, polyline, svgDocument, text } from "./svg";

const PINNED_ORDER = ["eoful", "wrong_theta", "misaligned_greedy", "bound"];

const COLORS: Record<string, string> = {
  eoful: "#1f77b4",
  wrong_theta: "#ff7f0e",
  misaligned_greedy: "#d62728",
  bound: "#7f7f7f",
};

const EXTRA_COLORS = ["#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

export function legendOrder(algos: string[]): string[] {
  const present = new Set(algos);
  const ordered = PINNED_ORDER.filter((name) => present.has(name));
  const rest = algos.filter((name) => !PINNED_ORDER.includes(name)).sort();
  return [...ordered, ...rest];
}

export function seriesColor(algo: string, index: number): string {
  return COLORS[algo] ?? EXTRA_COLORS[index % EXTRA_COLORS.length];
}

export interface RegretOptions {
  pattern: string;
  scaleBound: number;
}

export function renderRegret(opts: RegretOptions): string {
  const rows: RunRow[] = [];
  for (const path of expandGlob(opts.pattern)) {
    rows.push(...readRunCsv(path));
  }
  const byAlgo = groupByAlgo(rows);
  const bands = new Map<string, Band>();
  for (const [algo, seeds] of byAlgo) {
    const band = meanBand(algo, seeds);
    if (algo === "bound" && opts.scaleBound !== 1.0) {
      band.mean = band.mean.map((v) => v * opts.scaleBound);
      band.min = band.min.map((v) => v * opts.scaleBound);
      band.max = band.max.map((v) => v * opts.scaleBound);
    }
    bands.set(algo, band);
  }
  const order = legendOrder([...bands.keys()]);

  let tMax = 0;
  let yMax = 0;
  for (const band of bands.values()) {
    tMax = Math.max(tMax, band.t[band.t.length - 1]);
    yMax = Math.max(yMax, ...band.max);
  }
  const width = 720;
  const height = 440;
  const panel = frame({
    width,
    height,
    margin: { top: 36, right: 160, bottom: 48, left: 64 },
    xDomain: [0, tMax],
    yDomain: [0, yMax * 1.05 || 1],
    xLabel: "round",
    yLabel: "cumulative regret",
    title: "cumulative regret, mean over seeds with min-max band",
  });
  const parts = [...panel.parts];
  order.forEach((algo, idx) => {
    const band = bands.get(algo)!;
    const color = seriesColor(algo, idx);
    const xs = band.t.map(panel.x);
    if (band.min.some((v, i) => v !== band.max[i])) {
      parts.push(bandPath(xs, band.max.map(panel.y), band.min.map(panel.y), color));
    }
    const dash = algo === "bound" ? "6 3" : undefined;
    parts.push(polyline(xs, band.mean.map(panel.y), { stroke: color, dash }));
  });
  const legendX = width - 150;
  order.forEach((algo, idx) => {
    const y = 48 + idx * 18;
    const color = seriesColor(algo, idx);
    const dash = algo === "bound" ? "6 3" : undefined;
    parts.push(line(legendX, y - 4, legendX + 22, y - 4, { stroke: color, width: 2, dash }));
    parts.push(text(legendX + 28, y, algo, { size: 11 }));
  });
  return svgDocument(width, height, parts);
}
