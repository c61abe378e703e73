#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { specFor } from "./spec.js";
import { renderFigure } from "./render.js";

/**
 * Batch renderer: takes run/sweep summary JSON paths produced by the
 * simulation CLI, finds their companion CSVs next to them, and writes one
 * SVG per input into the output directory. It only ever reads files — it
 * never launches a simulation.
 */
export function main(argv: string[]): number {
  const args = yargs(argv)
    .usage("$0 <doc.json...> --out <dir>")
    .positional("inputs", { describe: "run or sweep summary JSON files" })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "directory for rendered SVG files",
    })
    .demandCommand(1, "at least one summary JSON is required")
    .strictOptions()
    .parseSync();

  for (const input of args._.map(String)) {
    const spec = specFor(input, args.out);
    const written = renderFigure(spec);
    console.log(written);
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");

if (invokedDirectly) {
  try {
    process.exit(main(hideBin(process.argv)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
