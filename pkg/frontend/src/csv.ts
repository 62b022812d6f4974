import Papa from "papaparse";

import { SchemaError } from "./schema";

export interface Table {
  fields: string[];
  rows: Record<string, number>[];
}

/** Parse a solver CSV: `# meta:` comment line, header row, numeric body. */
export function parseCsv(file: string, text: string): Table {
  const res = Papa.parse<Record<string, unknown>>(text, {
    header: true,
    comments: "#",
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (res.errors.length > 0) {
    const e = res.errors[0];
    throw new SchemaError(file, `CSV parse error at row ${e.row}: ${e.message}`);
  }
  const fields = res.meta.fields ?? [];
  const rows: Record<string, number>[] = [];
  for (const raw of res.data) {
    const row: Record<string, number> = {};
    for (const f of fields) {
      const v = raw[f];
      if (typeof v !== "number" || !isFinite(v)) {
        throw new SchemaError(file, `column '${f}' has a non-numeric entry (${String(v)})`);
      }
      row[f] = v;
    }
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new SchemaError(file, "no data rows");
  }
  return { fields, rows };
}

export function requireColumns(file: string, table: Table, needed: string[]): void {
  for (const c of needed) {
    if (!table.fields.includes(c)) {
      throw new SchemaError(file, `missing column '${c}' (found: ${table.fields.join(", ")})`);
    }
  }
}

export function column(table: Table, name: string): number[] {
  return table.rows.map((r) => r[name]);
}
