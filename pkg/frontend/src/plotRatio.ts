import { expandGlob, readRunCsv } from "./csv";
import { ratioSeries } from "./series";
import { frame, line, polyline, svgDocument, text } from "./svg";

export interface RatioOptions {
  pattern: string;
  refLine: number;
}

export function renderRatio(opts: RatioOptions): string {
  const paths = expandGlob(opts.pattern);
  const rows = paths.flatMap((path) => readRunCsv(path));
  const series = ratioSeries(rows);

  const tMax = series.t[series.t.length - 1];
  const yTop = Math.max(...series.max, opts.refLine) * 1.05;
  const width = 720;
  const height = 440;
  const panel = frame({
    width,
    height,
    margin: { top: 36, right: 150, bottom: 48, left: 64 },
    xDomain: [0, tMax],
    yDomain: [0, yTop || 1],
    xLabel: "round",
    yLabel: "bound-to-regret ratio",
    title: "running bound-to-regret ratio",
  });
  const parts = [...panel.parts];
  const xs = series.t.map(panel.x);
  const refY = panel.y(opts.refLine);
  parts.push(line(panel.x(0), refY, panel.x(tMax), refY, { stroke: "#999", dash: "4 3" }));
  parts.push(polyline(xs, series.max.map(panel.y), { stroke: "#1f77b4" }));
  parts.push(polyline(xs, series.mean.map(panel.y), { stroke: "#ff7f0e" }));
  const legendX = width - 140;
  const entries: Array<[string, string, string | undefined]> = [
    ["ratio_max", "#1f77b4", undefined],
    ["ratio_mean", "#ff7f0e", undefined],
    [`ref ${opts.refLine}`, "#999", "4 3"],
  ];
  entries.forEach(([label, color, dash], idx) => {
    const y = 48 + idx * 18;
    parts.push(line(legendX, y - 4, legendX + 22, y - 4, { stroke: color, width: 2, dash }));
    parts.push(text(legendX + 28, y, label, { size: 11 }));
  });
  return svgDocument(width, height, parts);
}
