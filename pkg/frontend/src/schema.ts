import { readFileSync } from "fs";
import { z } from "zod";

export const SCHEMA_VERSION = 1;

const scenarioSchema = z.object({
  S: z.number(),
  n_cells: z.number().int(),
  m: z.number(),
  g2: z.number(),
  gamma: z.number(),
  model: z.enum(["qlm", "dmh", "both"]),
  t_max: z.number(),
  n_times: z.number().int(),
  interaction_range: z.string(),
});

const runDocSchema = z
  .object({
    schema_version: z.number(),
    preset: z.string(),
    scenario: scenarioSchema,
  })
  .passthrough();

const sweepBlockSchema = z.object({
  S: z.number(),
  n_cells: z.number().int(),
  g2: z.number(),
  gammas: z.array(z.number()),
  masses: z.array(z.number()),
  t_max: z.number(),
  n_times: z.number().int(),
  interaction_range: z.string(),
});

const sweepDocSchema = z
  .object({
    schema_version: z.number(),
    preset: z.string(),
    sweep: sweepBlockSchema,
  })
  .passthrough();

export type RunDoc = z.infer<typeof runDocSchema>;
export type SweepDoc = z.infer<typeof sweepDocSchema>;

export class SchemaMismatchError extends Error {
  constructor(path: string, found: unknown) {
    super(
      `${path}: schema_version ${String(found)} is not the supported ` +
        `version ${SCHEMA_VERSION}; regenerate the file or upgrade this tool`
    );
    this.name = "SchemaMismatchError";
  }
}

function readJson(path: string): unknown {
  return JSON.parse(readFileSync(path, "utf8"));
}

function checkVersion(path: string, doc: unknown): void {
  const v = (doc as { schema_version?: unknown }).schema_version;
  if (v !== SCHEMA_VERSION) {
    throw new SchemaMismatchError(path, v);
  }
}

export function readRunDoc(path: string): RunDoc {
  const doc = readJson(path);
  checkVersion(path, doc);
  return runDocSchema.parse(doc);
}

export function readSweepDoc(path: string): SweepDoc {
  const doc = readJson(path);
  checkVersion(path, doc);
  return sweepDocSchema.parse(doc);
}

/** True if the JSON file describes a gamma sweep rather than a single run. */
export function isSweepDoc(path: string): boolean {
  const doc = readJson(path) as Record<string, unknown>;
  return "sweep" in doc;
}
