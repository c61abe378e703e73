import { scaleLinear, type ScaleLinear } from "d3-scale";

/**
 * Minimal SVG assembly. Everything here is a pure string builder with fixed
 * formatting, so identical inputs give byte-identical .svg files.
 */

export type Scale = ScaleLinear<number, number>;

export function linear(domain: [number, number], range: [number, number]): Scale {
  return scaleLinear().domain(domain).range(range);
}

/** Pixel coordinates: fixed 2-decimal formatting keeps files deterministic. */
export function px(v: number): string {
  return v.toFixed(2);
}

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

export interface Attrs {
  [key: string]: string | number;
}

export function tag(name: string, attrs: Attrs, body?: string): string {
  const parts = Object.entries(attrs).map(([k, v]) => `${k}="${typeof v === "number" ? px(v) : esc(String(v))}"`);
  const open = `<${name}${parts.length ? " " + parts.join(" ") : ""}`;
  return body === undefined ? `${open}/>` : `${open}>${body}</${name}>`;
}

export function group(attrs: Attrs, children: string[]): string {
  return tag("g", attrs, "\n" + children.join("\n") + "\n");
}

export function text(x: number, y: number, s: string, attrs: Attrs = {}): string {
  return tag("text", { x: px(x), y: px(y), ...attrs }, esc(s));
}

export function polylinePoints(xs: number[], ys: number[], sx: Scale, sy: Scale): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    pts.push(`${px(sx(xs[i]))},${px(sy(ys[i]))}`);
  }
  return pts.join(" ");
}

export interface AxisOptions {
  label?: string;
  tickCount?: number;
  /** Format tick labels; default trims trailing zeros. */
  format?: (v: number) => string;
}

function defaultFormat(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) {
    return v.toExponential(0);
  }
  return String(parseFloat(v.toPrecision(6)));
}

/** Horizontal axis along the bottom edge of the plot box. */
export function xAxis(sx: Scale, y0: number, opts: AxisOptions = {}): string {
  const fmt = opts.format ?? defaultFormat;
  const [lo, hi] = sx.domain();
  const parts: string[] = [
    tag("line", { x1: px(sx(lo)), y1: px(y0), x2: px(sx(hi)), y2: px(y0), stroke: "#000", "stroke-width": "1" }),
  ];
  for (const t of sx.ticks(opts.tickCount ?? 5)) {
    const x = sx(t);
    parts.push(tag("line", { x1: px(x), y1: px(y0), x2: px(x), y2: px(y0 + 4), stroke: "#000", "stroke-width": "1" }));
    parts.push(text(x, y0 + 15, fmt(t), { "text-anchor": "middle", "font-size": "10" }));
  }
  if (opts.label) {
    const mid = (sx(lo) + sx(hi)) / 2;
    parts.push(text(mid, y0 + 30, opts.label, { "text-anchor": "middle", "font-size": "11" }));
  }
  return group({ class: "x-axis" }, parts);
}

/** Vertical axis; `side` controls which edge and label orientation. */
export function yAxis(sy: Scale, x0: number, opts: AxisOptions & { side?: "left" | "right" } = {}): string {
  const fmt = opts.format ?? defaultFormat;
  const side = opts.side ?? "left";
  const sgn = side === "left" ? -1 : 1;
  const [lo, hi] = sy.domain();
  const parts: string[] = [
    tag("line", { x1: px(x0), y1: px(sy(lo)), x2: px(x0), y2: px(sy(hi)), stroke: "#000", "stroke-width": "1" }),
  ];
  for (const t of sy.ticks(opts.tickCount ?? 5)) {
    const y = sy(t);
    parts.push(tag("line", { x1: px(x0), y1: px(y), x2: px(x0 + sgn * 4), y2: px(y), stroke: "#000", "stroke-width": "1" }));
    parts.push(
      text(x0 + sgn * 7, y + 3, fmt(t), { "text-anchor": side === "left" ? "end" : "start", "font-size": "10" })
    );
  }
  if (opts.label) {
    const ymid = (sy(lo) + sy(hi)) / 2;
    const lx = x0 + sgn * 38;
    parts.push(
      text(lx, ymid, opts.label, {
        "text-anchor": "middle",
        "font-size": "11",
        transform: `rotate(${side === "left" ? -90 : 90} ${px(lx)} ${px(ymid)})`,
      })
    );
  }
  return group({ class: "y-axis" }, parts);
}

export function svgDocument(width: number, height: number, children: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">\n` +
    children.join("\n") +
    "\n</svg>\n"
  );
}
