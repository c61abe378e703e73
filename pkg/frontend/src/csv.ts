import { readFileSync } from "fs";
import Papa from "papaparse";

/**
 * A parsed CSV table. `raw` keeps the exact cell text from the file so that
 * rendered output can embed the values byte for byte; `num` is the same grid
 * run through Number() for scaling and axis work.
 */
export interface Table {
  path: string;
  columns: string[];
  raw: string[][];
  num: number[][];
}

export class MissingColumnError extends Error {
  constructor(path: string, missing: string[]) {
    super(`${path}: missing column(s) ${missing.join(", ")}`);
    this.name = "MissingColumnError";
  }
}

export class EmptySeriesError extends Error {
  constructor(path: string) {
    super(`${path}: no data rows, refusing to draw an empty plot`);
    this.name = "EmptySeriesError";
  }
}

export function loadTable(path: string): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<string[]>(text.trim(), { delimiter: "," });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`${path}: CSV parse error at row ${e.row}: ${e.message}`);
  }
  const rows = parsed.data;
  if (rows.length === 0) {
    throw new EmptySeriesError(path);
  }
  const columns = rows[0];
  const raw = rows.slice(1);
  if (raw.length === 0) {
    throw new EmptySeriesError(path);
  }
  const num = raw.map((r) => r.map(Number));
  return { path, columns, raw, num };
}

export function requireColumns(table: Table, names: string[]): void {
  const missing = names.filter((n) => !table.columns.includes(n));
  if (missing.length > 0) {
    throw new MissingColumnError(table.path, missing);
  }
}

/** Numeric column by header name. */
export function col(table: Table, name: string): number[] {
  const i = table.columns.indexOf(name);
  if (i < 0) {
    throw new MissingColumnError(table.path, [name]);
  }
  return table.num.map((r) => r[i]);
}

/** Column as the exact strings written by the producer. */
export function rawCol(table: Table, name: string): string[] {
  const i = table.columns.indexOf(name);
  if (i < 0) {
    throw new MissingColumnError(table.path, [name]);
  }
  return table.raw.map((r) => r[i]);
}

/** All columns whose header starts with `prefix`, in file order. */
export function columnsWithPrefix(table: Table, prefix: string): string[] {
  return table.columns.filter((n) => n.startsWith(prefix));
}
