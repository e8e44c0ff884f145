/** Strict reader for the experiment-results CSV schema. */

import { readFileSync } from "node:fs";

export const RESULT_COLUMNS = [
  "experiment", "filter", "n_x", "n_u", "r_dim", "s_x", "s_u",
  "alpha_x", "alpha_u", "seed", "replicate", "metric", "value",
  "runtime_seconds", "artifact_version",
] as const;

export interface ResultRow {
  experiment: string;
  filter: string;
  n_x: number;
  n_u: number;
  r_dim: number;
  s_x: number;
  s_u: number;
  alpha_x: number;
  alpha_u: number;
  seed: number;
  replicate: number;
  metric: string;
  value: number | "diverged";
  runtime_seconds: number;
  artifact_version: string;
}

export class SchemaError extends Error {}

/** RFC-4180 field splitting (quotes, escaped quotes, CRLF). */
export function splitCsvLine(line: string): string[] {
  const fields: string[] = [];
  let current = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"' && line[i + 1] === '"') {
        current += '"';
        i++;
      } else if (ch === '"') {
        quoted = false;
      } else {
        current += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(current);
      current = "";
    } else {
      current += ch;
    }
  }
  fields.push(current);
  return fields;
}

function toNumber(raw: string, column: string, lineNo: number): number {
  const value = Number(raw);
  if (!Number.isFinite(value) || raw.trim() === "") {
    throw new SchemaError(
      `line ${lineNo}: column ${column} is not numeric: ${JSON.stringify(raw)}`,
    );
  }
  return value;
}

export function parseResultCsv(text: string): ResultRow[] {
  const lines = text.split(/\r\n|\n/).filter((line) => line.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: missing header line");
  }
  const header = splitCsvLine(lines[0]);
  const index = new Map(header.map((name, i) => [name, i]));
  for (const column of RESULT_COLUMNS) {
    if (!index.has(column)) {
      throw new SchemaError(`missing required column: ${column}`);
    }
  }
  const rows: ResultRow[] = [];
  for (let lineNo = 1; lineNo < lines.length; lineNo++) {
    const fields = splitCsvLine(lines[lineNo]);
    const get = (column: string) => fields[index.get(column)!] ?? "";
    const rawValue = get("value");
    rows.push({
      experiment: get("experiment"),
      filter: get("filter"),
      n_x: toNumber(get("n_x"), "n_x", lineNo),
      n_u: toNumber(get("n_u"), "n_u", lineNo),
      r_dim: toNumber(get("r_dim"), "r_dim", lineNo),
      s_x: toNumber(get("s_x"), "s_x", lineNo),
      s_u: toNumber(get("s_u"), "s_u", lineNo),
      alpha_x: toNumber(get("alpha_x"), "alpha_x", lineNo),
      alpha_u: toNumber(get("alpha_u"), "alpha_u", lineNo),
      seed: toNumber(get("seed"), "seed", lineNo),
      replicate: toNumber(get("replicate"), "replicate", lineNo),
      metric: get("metric"),
      value: rawValue === "diverged" ? "diverged" : toNumber(rawValue, "value", lineNo),
      runtime_seconds: toNumber(get("runtime_seconds"), "runtime_seconds", lineNo),
      artifact_version: get("artifact_version"),
    });
  }
  return rows;
}

export function readResultCsv(path: string): ResultRow[] {
  return parseResultCsv(readFileSync(path, "utf-8"));
}
