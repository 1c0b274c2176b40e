export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`cannot render non-finite coordinate ${value}`);
  }
  const rounded = Math.round(value * 100) / 100;
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

export function scaleLinear(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  scale.domain = domain;
  scale.range = range;
  return scale;
}

export function ticks(lo: number, hi: number, count: number): number[] {
  if (hi <= lo) {
    return [lo];
  }
  const rawStep = (hi - lo) / Math.max(1, count);
  const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = power * 10;
  for (const mult of [1, 2, 5]) {
    if (power * mult >= rawStep) {
      step = power * mult;
      break;
    }
  }
  const out: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    out.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return out;
}

export function tickLabel(value: number): string {
  if (value === 0) {
    return "0";
  }
  const abs = Math.abs(value);
  if (abs >= 1e5 || abs < 1e-3) {
    return value.toExponential(1).replace("e+", "e");
  }
  const text = value.toPrecision(6);
  return text.includes(".") ? text.replace(/0+$/, "").replace(/\.$/, "") : text;
}

export interface PathStyle {
  stroke: string;
  width?: number;
  dash?: string;
}

export function polyline(xs: number[], ys: number[], style: PathStyle): string {
  const points = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
  const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
  const width = style.width ?? 1.5;
  return `<polyline fill="none" stroke="${style.stroke}" stroke-width="${width}"${dash} points="${points}"/>`;
}

export function bandPath(xs: number[], upper: number[], lower: number[], fill: string): string {
  const forward = xs.map((x, i) => `${fmt(x)},${fmt(upper[i])}`);
  const backward = [...xs.keys()].reverse().map((i) => `${fmt(xs[i])},${fmt(lower[i])}`);
  return `<polygon fill="${fill}" fill-opacity="0.2" stroke="none" points="${[...forward, ...backward].join(" ")}"/>`;
}

export function line(x1: number, y1: number, x2: number, y2: number, style: PathStyle): string {
  const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
  const width = style.width ?? 1;
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${style.stroke}" stroke-width="${width}"${dash}/>`;
}

export function rect(x: number, y: number, w: number, h: number, fill: string): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`;
}

export interface TextStyle {
  size?: number;
  anchor?: "start" | "middle" | "end";
  fill?: string;
}

const ESCAPES: Record<string, string> = { "&": "&amp;", "<": "&lt;", ">": "&gt;" };

export function escapeText(text: string): string {
  return text.replace(/[&<>]/g, (ch) => ESCAPES[ch]);
}

export function text(x: number, y: number, content: string, style: TextStyle = {}): string {
  const size = style.size ?? 11;
  const anchor = style.anchor ?? "start";
  const fill = style.fill ?? "#222";
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif" font-size="${size}"` +
    ` text-anchor="${anchor}" fill="${fill}">${escapeText(content)}</text>`
  );
}

export function svgDocument(width: number, height: number, body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    rect(0, 0, width, height, "#ffffff"),
    ...body,
    "</svg>",
  ].join("\n");
}

export interface Frame {
  x: Scale;
  y: Scale;
  parts: string[];
}

export interface FrameOptions {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  xDomain: [number, number];
  yDomain: [number, number];
  xLabel: string;
  yLabel: string;
  title: string;
  xOffset?: number;
  yOffset?: number;
}

export function frame(opts: FrameOptions): Frame {
  const ox = opts.xOffset ?? 0;
  const oy = opts.yOffset ?? 0;
  const left = ox + opts.margin.left;
  const right = ox + opts.width - opts.margin.right;
  const top = oy + opts.margin.top;
  const bottom = oy + opts.height - opts.margin.bottom;
  const x = scaleLinear(opts.xDomain, [left, right]);
  const y = scaleLinear(opts.yDomain, [bottom, top]);
  const parts: string[] = [];
  parts.push(line(left, bottom, right, bottom, { stroke: "#444" }));
  parts.push(line(left, bottom, left, top, { stroke: "#444" }));
  for (const tick of ticks(opts.xDomain[0], opts.xDomain[1], 6)) {
    const px = x(tick);
    parts.push(line(px, bottom, px, bottom + 4, { stroke: "#444" }));
    parts.push(text(px, bottom + 16, tickLabel(tick), { anchor: "middle", size: 10 }));
  }
  for (const tick of ticks(opts.yDomain[0], opts.yDomain[1], 6)) {
    const py = y(tick);
    parts.push(line(left - 4, py, left, py, { stroke: "#444" }));
    parts.push(text(left - 7, py + 3, tickLabel(tick), { anchor: "end", size: 10 }));
  }
  parts.push(text((left + right) / 2, bottom + 32, opts.xLabel, { anchor: "middle" }));
  parts.push(
    `<g transform="rotate(-90 ${fmt(ox + 14)} ${fmt((top + bottom) / 2)})">` +
      text(ox + 14, (top + bottom) / 2, opts.yLabel, { anchor: "middle" }) +
      "</g>",
  );
  parts.push(text((left + right) / 2, top - 8, opts.title, { anchor: "middle", size: 13 }));
  return { x, y, parts };
}
