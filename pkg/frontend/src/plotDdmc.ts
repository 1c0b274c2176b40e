import { StatRow, readStatsCsv } from "./csv";
import { frame, line, rect, svgDocument, text, tickLabel } from "./svg";

const MONO_SLACK = 1e-12;

export function monotonicityScore(rows: StatRow[]): number {
  const means = new Map<number, number>();
  for (const row of rows) {
    means.set(row.bucket, row.mean);
  }
  const pairs = [...means.keys()].sort((a, b) => a - b).filter((s) => means.has(s + 1));
  if (pairs.length === 0) {
    return 1.0;
  }
  const ok = pairs.filter((s) => means.get(s + 1)! <= means.get(s)! + MONO_SLACK).length;
  return ok / pairs.length;
}

export interface DdmcOptions {
  path: string;
}

export function renderDdmc(opts: DdmcOptions): string {
  const rows = readStatsCsv(opts.path);
  const metrics = [...new Set(rows.map((r) => r.metric))].sort();
  const width = 720;
  const panelHeight = 300;
  const parts: string[] = [];
  metrics.forEach((metric, panelIdx) => {
    const sub = rows.filter((r) => r.metric === metric).sort((a, b) => a.bucket - b.bucket);
    const score = monotonicityScore(sub);
    const dumpId = sub[0].dumpId;
    const yTop = Math.max(...sub.map((r) => r.mean + Math.sqrt(r.variance)), 0) * 1.1;
    const panel = frame({
      width,
      height: panelHeight,
      margin: { top: 36, right: 40, bottom: 48, left: 64 },
      xDomain: [sub[0].bucket - 0.5, sub[sub.length - 1].bucket + 0.5],
      yDomain: [0, yTop || 1],
      xLabel: "shared suffix length",
      yLabel: `${metric} distance`,
      title: `${dumpId}: mean embedding distance by shared suffix`,
      yOffset: panelIdx * panelHeight,
    });
    parts.push(...panel.parts);
    const slot = Math.abs(panel.x(1) - panel.x(0));
    const barWidth = Math.min(40, slot * 0.6);
    const y0 = panel.y(0);
    for (const row of sub) {
      const cx = panel.x(row.bucket);
      const top = panel.y(row.mean);
      parts.push(rect(cx - barWidth / 2, top, barWidth, y0 - top, "#1f77b4"));
      const err = Math.sqrt(row.variance);
      if (err > 0) {
        const hi = panel.y(row.mean + err);
        const lo = panel.y(Math.max(0, row.mean - err));
        parts.push(line(cx, hi, cx, lo, { stroke: "#222" }));
        parts.push(line(cx - 5, hi, cx + 5, hi, { stroke: "#222" }));
        parts.push(line(cx - 5, lo, cx + 5, lo, { stroke: "#222" }));
      }
      parts.push(
        text(cx, y0 + 28, `n=${row.count}`, { anchor: "middle", size: 9, fill: "#666" }),
      );
    }
    parts.push(
      text(width - 44, panelIdx * panelHeight + 48, `monotonicity ${tickLabel(score)}`, {
        anchor: "end",
        size: 12,
      }),
    );
  });
  return svgDocument(width, panelHeight * metrics.length, parts);
}
