import { describe, expect, it } from "vitest";
import { mkdtempSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { SchemaMismatchError, isSweepDoc, readRunDoc, readSweepDoc } from "../src/schema.js";

const SAMPLE = new URL("../data/sample/", import.meta.url).pathname;

function withVersion(src: string, version: unknown): string {
  const doc = JSON.parse(readFileSync(join(SAMPLE, src), "utf8"));
  doc.schema_version = version;
  const dir = mkdtempSync(join(tmpdir(), "figdoc-"));
  const p = join(dir, src);
  writeFileSync(p, JSON.stringify(doc));
  return p;
}

describe("summary documents", () => {
  it("accepts the shipped run document", () => {
    const doc = readRunDoc(join(SAMPLE, "fig2a.json"));
    expect(doc.preset).toBe("fig2a");
    expect(doc.scenario.S).toBe(0.5);
    expect(doc.scenario.model).toBe("both");
  });

  it("accepts the shipped sweep document", () => {
    const doc = readSweepDoc(join(SAMPLE, "fig4_sweep.json"));
    expect(doc.sweep.gammas).toContain(1.5);
    expect(doc.sweep.masses.length).toBe(2);
  });

  it("tells runs and sweeps apart", () => {
    expect(isSweepDoc(join(SAMPLE, "fig4_sweep.json"))).toBe(true);
    expect(isSweepDoc(join(SAMPLE, "fig2a.json"))).toBe(false);
  });
});

describe("schema_version gate", () => {
  it("rejects a newer version instead of guessing", () => {
    const p = withVersion("fig2a.json", 2);
    expect(() => readRunDoc(p)).toThrow(SchemaMismatchError);
    expect(() => readRunDoc(p)).toThrow(/schema_version 2/);
  });

  it("rejects a missing version field", () => {
    const p = withVersion("fig4_sweep.json", undefined);
    expect(() => readSweepDoc(p)).toThrow(SchemaMismatchError);
  });

  it("rejects a malformed document body", () => {
    const doc = JSON.parse(readFileSync(join(SAMPLE, "fig2a.json"), "utf8"));
    delete doc.scenario.S;
    const dir = mkdtempSync(join(tmpdir(), "figdoc-"));
    const p = join(dir, "broken.json");
    writeFileSync(p, JSON.stringify(doc));
    expect(() => readRunDoc(p)).toThrow();
  });
});
