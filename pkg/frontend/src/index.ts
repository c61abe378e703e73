export { loadTable, col, rawCol, columnsWithPrefix, requireColumns, MissingColumnError, EmptySeriesError } from "./csv.js";
export { readRunDoc, readSweepDoc, isSweepDoc, SchemaMismatchError, SCHEMA_VERSION } from "./schema.js";
export type { RunDoc, SweepDoc } from "./schema.js";
export { runSpec, sweepSpec, specFor, timeLabelFor } from "./spec.js";
export type { PlotSpec } from "./spec.js";
export { renderFigure, renderToString } from "./render.js";
