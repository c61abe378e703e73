import { existsSync } from "fs";
import { basename, dirname, join } from "path";
import { isSweepDoc, readRunDoc, readSweepDoc, type RunDoc, type SweepDoc } from "./schema.js";

/**
 * A fully resolved description of one figure: where the data lives, how the
 * panels are arranged, what the axes say, and where the image goes. Built
 * from a run/sweep JSON document; construction fails on schema_version
 * mismatch before any file is touched for rendering.
 */
export interface PlotSpec {
  kind: "run" | "sweep";
  docPath: string;
  /** CSV paths keyed by series name ("qlm", "dmh" for runs; "table" for sweeps). */
  inputs: Record<string, string>;
  /** Panel identifiers in draw order. */
  layout: string[];
  timeLabel: string;
  outputPath: string;
  doc: RunDoc | SweepDoc;
}

/** Axis time label in model units for the given spin length. */
export function timeLabelFor(S: number): string {
  return S === 0.5 ? "time t [1/w]" : "time t [1/√2w]";
}

function siblingCsv(docPath: string, suffix: string): string {
  const dir = dirname(docPath);
  const stem = basename(docPath).replace(/\.json$/, "");
  return join(dir, `${stem}${suffix}.csv`);
}

export function runSpec(docPath: string, outDir: string): PlotSpec {
  const doc = readRunDoc(docPath);
  const inputs: Record<string, string> = {};
  for (const key of ["qlm", "dmh"] as const) {
    if (doc.scenario.model === "both" || doc.scenario.model === key) {
      inputs[key] = siblingCsv(docPath, `_${key}`);
    }
  }
  for (const p of Object.values(inputs)) {
    if (!existsSync(p)) {
      throw new Error(`${docPath}: expected companion CSV ${p} is missing`);
    }
  }
  // Panels: density maps per model, then the flux-sum overlay, then
  // fidelity with the constraint-violation trace.
  const layout: string[] = [];
  if (inputs.qlm) layout.push("density:qlm");
  if (inputs.dmh) layout.push("density:dmh");
  layout.push("flux");
  layout.push("fidelity");
  return {
    kind: "run",
    docPath,
    inputs,
    layout,
    timeLabel: timeLabelFor(doc.scenario.S),
    outputPath: join(outDir, `${doc.preset}.svg`),
    doc,
  };
}

export function sweepSpec(docPath: string, outDir: string): PlotSpec {
  const doc = readSweepDoc(docPath);
  const table = siblingCsv(docPath, "");
  if (!existsSync(table)) {
    throw new Error(`${docPath}: expected companion CSV ${table} is missing`);
  }
  return {
    kind: "sweep",
    docPath,
    inputs: { table },
    layout: ["avg-fidelity"],
    timeLabel: timeLabelFor(doc.sweep.S),
    outputPath: join(outDir, `${doc.preset}_sweep.svg`),
    doc,
  };
}

/** Dispatch on document shape: sweep summaries carry a `sweep` block. */
export function specFor(docPath: string, outDir: string): PlotSpec {
  return isSweepDoc(docPath) ? sweepSpec(docPath, outDir) : runSpec(docPath, outDir);
}
