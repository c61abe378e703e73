import { describe, expect, it } from "vitest";
import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { EmptySeriesError, MissingColumnError, col, loadTable, rawCol, requireColumns, columnsWithPrefix } from "../src/csv.js";

const SAMPLE = new URL("../data/sample/", import.meta.url).pathname;

function tmpCsv(text: string): string {
  const dir = mkdtempSync(join(tmpdir(), "figcsv-"));
  const p = join(dir, "t.csv");
  writeFileSync(p, text);
  return p;
}

describe("loadTable", () => {
  it("reads a run CSV with every column intact", () => {
    const t = loadTable(join(SAMPLE, "fig2a_qlm.csv"));
    expect(t.columns[0]).toBe("time");
    expect(t.columns).toContain("flux_sum");
    expect(t.columns).toContain("gauss_G");
    expect(columnsWithPrefix(t, "density_S")).toEqual(
      ["density_S1", "density_S2", "density_S3", "density_S4", "density_S5", "density_S6"]
    );
    expect(t.raw.length).toBe(t.num.length);
    expect(t.raw.length).toBeGreaterThan(100);
  });

  it("keeps raw text and numbers in lockstep", () => {
    const t = loadTable(join(SAMPLE, "fig2a_dmh.csv"));
    for (let i = 0; i < t.raw.length; i += 37) {
      for (let j = 0; j < t.columns.length; j++) {
        expect(t.num[i][j]).toBe(Number(t.raw[i][j]));
      }
    }
  });

  it("rejects a header-only file", () => {
    const p = tmpCsv("time,flux_sum\n");
    expect(() => loadTable(p)).toThrow(EmptySeriesError);
  });

  it("rejects an empty file", () => {
    const p = tmpCsv("");
    expect(() => loadTable(p)).toThrow(EmptySeriesError);
  });
});

describe("column access", () => {
  it("col and rawCol agree", () => {
    const t = loadTable(join(SAMPLE, "fig2a_qlm.csv"));
    const v = col(t, "flux_sum");
    const r = rawCol(t, "flux_sum");
    expect(v.length).toBe(r.length);
    expect(v[0]).toBe(Number(r[0]));
  });

  it("missing columns are reported by name", () => {
    const t = loadTable(join(SAMPLE, "fig2a_qlm.csv"));
    expect(() => requireColumns(t, ["time", "no_such_a", "no_such_b"])).toThrow(/no_such_a, no_such_b/);
    expect(() => col(t, "fidelity")).toThrow(MissingColumnError);
  });
});
