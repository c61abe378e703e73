import { writeFileSync, mkdirSync } from "fs";
import { dirname } from "path";
import { interpolateViridis } from "d3-scale-chromatic";
import { col, columnsWithPrefix, loadTable, rawCol, requireColumns, type Table } from "./csv.js";
import type { PlotSpec } from "./spec.js";
import type { SweepDoc } from "./schema.js";
import { group, linear, polylinePoints, px, svgDocument, tag, text, xAxis, yAxis, type Scale } from "./svg.js";

// Fixed palette/geometry: rendering is a pure function of the input files.
const QLM_COLOR = "#1f77b4";
const DMH_COLOR = "#d62728";
const G_COLOR = "#7f7f7f";
const PANEL_W = 450;
const PANEL_H = 320;
const MARGIN = { left: 58, right: 58, top: 34, bottom: 46 };
const INNER_W = PANEL_W - MARGIN.left - MARGIN.right;
const INNER_H = PANEL_H - MARGIN.top - MARGIN.bottom;

interface Panel {
  title: string;
  body: string[];
}

function panelFrame(p: Panel): string[] {
  return [
    text(MARGIN.left, MARGIN.top - 12, p.title, { "font-size": "12", "font-weight": "bold" }),
    ...p.body,
  ];
}

/** Cell edges halfway between sample positions (first/last extend outward). */
function midpointEdges(xs: number[]): number[] {
  const edges: number[] = [];
  if (xs.length === 1) {
    return [xs[0] - 0.5, xs[0] + 0.5];
  }
  edges.push(xs[0] - (xs[1] - xs[0]) / 2);
  for (let i = 0; i + 1 < xs.length; i++) {
    edges.push((xs[i] + xs[i + 1]) / 2);
  }
  edges.push(xs[xs.length - 1] + (xs[xs.length - 1] - xs[xs.length - 2]) / 2);
  return edges;
}

/**
 * Occupation heatmap: one rect per CSV sample, colored on a fixed [0, 1]
 * occupation scale. Each site row carries its column's exact cell text in
 * `data-values`, so nothing survives only as a pixel color.
 */
function densityPanel(table: Table, title: string, timeLabel: string, source: string): Panel {
  requireColumns(table, ["time"]);
  const siteCols = columnsWithPrefix(table, "density_S");
  if (siteCols.length === 0) {
    throw new Error(`${table.path}: no density_S* columns to map`);
  }
  const times = col(table, "time");
  const edges = midpointEdges(times);
  const sx = linear([edges[0], edges[edges.length - 1]], [MARGIN.left, MARGIN.left + INNER_W]);
  // Site index on y, first site at the bottom.
  const sy = linear([0, siteCols.length], [MARGIN.top + INNER_H, MARGIN.top]);
  const rows: string[] = [];
  for (let s = 0; s < siteCols.length; s++) {
    const values = col(table, siteCols[s]);
    const raws = rawCol(table, siteCols[s]);
    const cells: string[] = [];
    const y = sy(s + 1);
    const h = sy(s) - sy(s + 1);
    for (let i = 0; i < values.length; i++) {
      const x0 = sx(edges[i]);
      const x1 = sx(edges[i + 1]);
      cells.push(
        tag("rect", {
          x: px(x0),
          y: px(y),
          width: px(x1 - x0),
          height: px(h),
          fill: interpolateViridis(Math.min(1, Math.max(0, values[i]))),
        })
      );
    }
    rows.push(
      group(
        { class: "site-row", "data-source": source, "data-column": siteCols[s], "data-values": raws.join(" ") },
        cells
      )
    );
  }
  const siteTicks: string[] = [];
  for (let s = 0; s < siteCols.length; s++) {
    siteTicks.push(
      text(MARGIN.left - 7, sy(s + 0.5) + 3, siteCols[s].replace("density_", ""), {
        "text-anchor": "end",
        "font-size": "10",
      })
    );
  }
  return {
    title,
    body: [
      group({ class: "heatmap" }, rows),
      ...siteTicks,
      xAxis(sx, MARGIN.top + INNER_H, { label: timeLabel }),
      text(MARGIN.left - 40, MARGIN.top + INNER_H / 2, "site", {
        "text-anchor": "middle",
        "font-size": "11",
        transform: `rotate(-90 ${px(MARGIN.left - 40)} ${px(MARGIN.top + INNER_H / 2)})`,
      }),
    ],
  };
}

interface Series {
  name: string;
  column: string;
  times: number[];
  values: number[];
  raws: string[];
  color: string;
  dash?: string;
}

function seriesFromTable(table: Table, name: string, column: string, color: string, dash?: string): Series {
  requireColumns(table, ["time", column]);
  return {
    name,
    column,
    times: col(table, "time"),
    values: col(table, column),
    raws: rawCol(table, column),
    color,
    dash,
  };
}

function seriesPolyline(s: Series, sx: Scale, sy: Scale): string {
  return tag("polyline", {
    points: polylinePoints(s.times, s.values, sx, sy),
    fill: "none",
    stroke: s.color,
    "stroke-width": "1.5",
    ...(s.dash ? { "stroke-dasharray": s.dash } : {}),
    "data-series": s.name,
    "data-column": s.column,
    "data-values": s.raws.join(" "),
  });
}

function legend(entries: Series[], x: number, y: number): string {
  const parts: string[] = [];
  entries.forEach((s, i) => {
    const yy = y + 14 * i;
    parts.push(
      tag("line", {
        x1: px(x),
        y1: px(yy - 3),
        x2: px(x + 18),
        y2: px(yy - 3),
        stroke: s.color,
        "stroke-width": "1.5",
        ...(s.dash ? { "stroke-dasharray": s.dash } : {}),
      })
    );
    parts.push(text(x + 23, yy, s.name, { "font-size": "10" }));
  });
  return group({ class: "legend" }, parts);
}

function fluxPanel(tables: { name: string; table: Table }[], timeLabel: string): Panel {
  const palette: Record<string, [string, string?]> = {
    qlm: [QLM_COLOR, undefined],
    dmh: [DMH_COLOR, "5 3"],
  };
  const series = tables.map(({ name, table }) =>
    seriesFromTable(table, name, "flux_sum", palette[name][0], palette[name][1])
  );
  const allT = series.flatMap((s) => s.times);
  const allV = series.flatMap((s) => s.values);
  const vLo = Math.min(...allV);
  const vHi = Math.max(...allV);
  const pad = 0.05 * (vHi - vLo || 1);
  const sx = linear([Math.min(...allT), Math.max(...allT)], [MARGIN.left, MARGIN.left + INNER_W]);
  const sy = linear([vLo - pad, vHi + pad], [MARGIN.top + INNER_H, MARGIN.top]);
  const body: string[] = [];
  if (vLo < 0 && vHi > 0) {
    body.push(
      tag("line", {
        x1: px(sx.range()[0]),
        y1: px(sy(0)),
        x2: px(sx.range()[1]),
        y2: px(sy(0)),
        stroke: "#bbb",
        "stroke-width": "0.75",
      })
    );
  }
  body.push(...series.map((s) => seriesPolyline(s, sx, sy)));
  body.push(legend(series, MARGIN.left + INNER_W - 70, MARGIN.top + 12));
  body.push(xAxis(sx, MARGIN.top + INNER_H, { label: timeLabel }));
  body.push(yAxis(sy, MARGIN.left, { label: "total electric flux" }));
  return { title: "electric flux sum", body };
}

/**
 * Fidelity on the left axis, Gauss-law violation on a log right axis. Exact
 * zeros in G sit on the axis floor; their true value is still in
 * `data-values`.
 */
function fidelityPanel(tables: { name: string; table: Table }[], timeLabel: string): Panel {
  const fidSeries: Series[] = [];
  const gSeries: Series[] = [];
  for (const { name, table } of tables) {
    if (table.columns.includes("fidelity")) {
      fidSeries.push(seriesFromTable(table, "fidelity", "fidelity", DMH_COLOR));
    }
    gSeries.push(
      seriesFromTable(table, `G (${name})`, "gauss_G", G_COLOR, name === "qlm" ? "2 2" : undefined)
    );
  }
  const times = gSeries[0].times;
  const sx = linear([times[0], times[times.length - 1]], [MARGIN.left, MARGIN.left + INNER_W]);
  const syFid = linear([0, 1], [MARGIN.top + INNER_H, MARGIN.top]);
  const G_FLOOR = 1e-18;
  const logs = gSeries.flatMap((s) => s.values.map((v) => Math.log10(Math.max(v, G_FLOOR))));
  const lgLo = Math.floor(Math.min(...logs));
  const lgHi = Math.ceil(Math.max(...logs, lgLo + 1));
  const syG = linear([lgLo, lgHi], [MARGIN.top + INNER_H, MARGIN.top]);
  const body: string[] = [];
  for (const s of fidSeries) {
    body.push(seriesPolyline(s, sx, syFid));
  }
  for (const s of gSeries) {
    body.push(
      tag("polyline", {
        points: polylinePoints(s.times, s.values.map((v) => Math.log10(Math.max(v, G_FLOOR))), sx, syG),
        fill: "none",
        stroke: s.color,
        "stroke-width": "1",
        ...(s.dash ? { "stroke-dasharray": s.dash } : {}),
        "data-series": s.name,
        "data-column": s.column,
        "data-values": s.raws.join(" "),
      })
    );
  }
  body.push(legend([...fidSeries, ...gSeries], MARGIN.left + INNER_W - 80, MARGIN.top + 12));
  body.push(xAxis(sx, MARGIN.top + INNER_H, { label: timeLabel }));
  body.push(yAxis(syFid, MARGIN.left, { label: "fidelity" }));
  body.push(
    yAxis(syG, MARGIN.left + INNER_W, {
      side: "right",
      label: "Gauss-law violation G",
      format: (v) => `1e${v}`,
    })
  );
  return { title: "fidelity and constraint violation", body };
}

function runPanels(spec: PlotSpec): Panel[] {
  const tables: { name: string; table: Table }[] = [];
  for (const name of ["qlm", "dmh"]) {
    if (spec.inputs[name]) {
      tables.push({ name, table: loadTable(spec.inputs[name]) });
    }
  }
  const titles: Record<string, string> = {
    qlm: "link model: site occupations",
    dmh: "molecular emulator: site occupations",
  };
  const panels: Panel[] = [];
  tables.forEach(({ name, table }) => {
    panels.push(densityPanel(table, titles[name], spec.timeLabel, name));
  });
  panels.push(fluxPanel(tables, spec.timeLabel));
  panels.push(fidelityPanel(tables, spec.timeLabel));
  panels.forEach((p, i) => {
    p.title = `(${"abcdef"[i]}) ${p.title}`;
  });
  return panels;
}

function sweepPanel(spec: PlotSpec): Panel {
  const doc = spec.doc as SweepDoc;
  const table = loadTable(spec.inputs.table);
  requireColumns(table, ["gamma", "mass", "avg_fidelity"]);
  const gammas = col(table, "gamma");
  const masses = rawCol(table, "mass");
  const avg = col(table, "avg_fidelity");
  const avgRaw = rawCol(table, "avg_fidelity");
  const massKeys = [...new Set(masses)];
  const colors = [QLM_COLOR, DMH_COLOR, G_COLOR];
  const sx = linear(
    [Math.min(...gammas), Math.max(...gammas)],
    [MARGIN.left, MARGIN.left + INNER_W]
  );
  const sy = linear([0, 1], [MARGIN.top + INNER_H, MARGIN.top]);
  const body: string[] = [];
  const legendEntries: Series[] = [];
  massKeys.forEach((mk, i) => {
    const idx = masses.map((m, j) => (m === mk ? j : -1)).filter((j) => j >= 0);
    if (idx.length === 0) {
      throw new Error(`${table.path}: no rows for mass ${mk}`);
    }
    const xs = idx.map((j) => gammas[j]);
    const ys = idx.map((j) => avg[j]);
    const raws = idx.map((j) => avgRaw[j]);
    const color = colors[i % colors.length];
    body.push(
      tag("polyline", {
        points: polylinePoints(xs, ys, sx, sy),
        fill: "none",
        stroke: color,
        "stroke-width": "1.5",
        "data-series": `m=${mk}`,
        "data-column": "avg_fidelity",
        "data-values": raws.join(" "),
      })
    );
    for (let j = 0; j < xs.length; j++) {
      body.push(
        tag("circle", { cx: px(sx(xs[j])), cy: px(sy(ys[j])), r: "2.5", fill: color })
      );
    }
    legendEntries.push({
      name: `m = ${mk}`,
      column: "avg_fidelity",
      times: xs,
      values: ys,
      raws,
      color,
    });
  });
  body.push(legend(legendEntries, MARGIN.left + INNER_W - 80, MARGIN.top + 12));
  body.push(xAxis(sx, MARGIN.top + INNER_H, { label: "spacing ratio γ" }));
  body.push(yAxis(sy, MARGIN.left, { label: "average fidelity" }));
  return { title: `emulation quality across spacing ratios (${doc.preset})`, body };
}

/** Build the SVG text for a spec without touching the output path. */
export function renderToString(spec: PlotSpec): string {
  const panels = spec.kind === "run" ? runPanels(spec) : [sweepPanel(spec)];
  const cols = panels.length > 1 ? 2 : 1;
  const rows = Math.ceil(panels.length / cols);
  const placed = panels.map((p, i) => {
    const cx = (i % cols) * PANEL_W;
    const cy = Math.floor(i / cols) * PANEL_H;
    return group({ class: "panel", transform: `translate(${cx} ${cy})` }, panelFrame(p));
  });
  return svgDocument(cols * PANEL_W, rows * PANEL_H, [
    tag("rect", { x: "0", y: "0", width: String(cols * PANEL_W), height: String(rows * PANEL_H), fill: "#fff" }),
    ...placed,
  ]);
}

/** Render a spec and write its image; returns the output path. */
export function renderFigure(spec: PlotSpec): string {
  const svg = renderToString(spec);
  mkdirSync(dirname(spec.outputPath), { recursive: true });
  writeFileSync(spec.outputPath, svg);
  return spec.outputPath;
}
