/** plots <figure-id> --in <file...> --out <file> [--format svg|png]
 *
 * Reads the documented results CSV schema (curve figures) or the density-dump
 * JSON (banana panels) and writes one deterministic image per invocation.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { ResultRow, SchemaError, readResultCsv } from "./csv.js";
import {
  DensityDump,
  FIGURE_IDS,
  FigureId,
  renderBananaPanels,
  renderCurveFigure,
} from "./figures.js";

interface CliArgs {
  figure: FigureId;
  inputs: string[];
  out: string;
  format: "svg" | "png";
}

export function parseArgs(argv: string[]): CliArgs {
  const [figure, ...rest] = argv;
  if (!figure || !(FIGURE_IDS as readonly string[]).includes(figure)) {
    throw new SchemaError(
      `usage: plots <${FIGURE_IDS.join("|")}> --in <file...> --out <file> [--format svg|png]`,
    );
  }
  const inputs: string[] = [];
  let out = "";
  let format: "svg" | "png" = "svg";
  for (let i = 0; i < rest.length; i++) {
    const flag = rest[i];
    if (flag === "--in") {
      while (i + 1 < rest.length && !rest[i + 1].startsWith("--")) inputs.push(rest[++i]);
    } else if (flag === "--out") {
      out = rest[++i] ?? "";
    } else if (flag === "--format") {
      const value = rest[++i];
      if (value !== "svg" && value !== "png") throw new SchemaError("--format must be svg or png");
      format = value;
    } else {
      throw new SchemaError(`unknown flag ${flag}`);
    }
  }
  if (inputs.length === 0) throw new SchemaError("at least one --in file is required");
  if (!out) throw new SchemaError("--out is required");
  return { figure: figure as FigureId, inputs, out, format };
}

export function renderFigure(figure: FigureId, inputs: string[]): string {
  if (figure === "banana-panels") {
    if (inputs.length !== 1) {
      throw new SchemaError("banana-panels takes exactly one density-dump JSON input");
    }
    const dump = JSON.parse(readFileSync(inputs[0], "utf-8")) as DensityDump;
    if (!dump.grid || !dump.filters) {
      throw new SchemaError("input is not a density dump (missing grid/filters)");
    }
    return renderBananaPanels(dump);
  }
  const rows: ResultRow[] = inputs.flatMap((path) => readResultCsv(path));
  return renderCurveFigure(figure, rows);
}

async function toPng(svg: string): Promise<Buffer> {
  let resvg;
  try {
    resvg = await import("@resvg/resvg-js");
  } catch {
    throw new SchemaError("png output needs the optional @resvg/resvg-js dependency");
  }
  return new resvg.Resvg(svg).render().asPng();
}

export async function main(argv: string[]): Promise<number> {
  let args: CliArgs;
  try {
    args = parseArgs(argv);
    const svg = renderFigure(args.figure, args.inputs);
    if (args.format === "png") {
      writeFileSync(args.out, await toPng(svg));
    } else {
      writeFileSync(args.out, svg);
    }
  } catch (error) {
    if (error instanceof SchemaError) {
      console.error(`error: ${error.message}`);
      return 2;
    }
    console.error(`error: ${(error as Error).message}`);
    return 1;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

const invokedDirectly = process.argv[1]?.endsWith("cli.js");
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
