/**
 * The four figure kinds. Pure functions of the input files: the solver's
 * CSV/JSON artifacts go in, a deterministic SVG string comes out.
 */

import * as fs from "fs";
import * as path from "path";

import { column, parseCsv, requireColumns } from "./csv";
import { CSV_COLUMNS, SchemaError, parseConvergenceReport } from "./schema";
import { Annotation, Series, renderFigure } from "./svg";

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

export type PlotKind = "rate" | "profile" | "residual" | "energy";

export function render(kind: PlotKind, inputs: string[]): string {
  switch (kind) {
    case "rate":
      return renderRate(inputs);
    case "profile":
      return renderProfile(inputs);
    case "residual":
      return renderResidual(inputs);
    case "energy":
      return renderEnergy(inputs);
    default:
      throw new Error(`unknown plot kind '${kind}'`);
  }
}

function read(file: string): string {
  return fs.readFileSync(file, "utf-8");
}

/** Log-log error vs Knudsen number with the fitted slope and the 1/4 guide. */
export function renderRate(inputs: string[]): string {
  if (inputs.length !== 1) throw new Error("rate takes exactly one input");
  const file = inputs[0];
  let eps: number[];
  let err: number[];
  let slope: number;
  if (file.endsWith(".json")) {
    const rep = parseConvergenceReport(file, read(file));
    eps = rep.epsilons;
    err = rep.sup_errors;
    slope = rep.slope;
  } else {
    const table = parseCsv(file, read(file));
    requireColumns(file, table, CSV_COLUMNS.convergence);
    eps = column(table, "epsilon");
    err = column(table, "sup_error");
    slope = table.rows[0].slope;
  }
  if (err.some((v) => v <= 0)) {
    throw new SchemaError(file, "sup_error values must be positive for the log-log rate plot");
  }
  // quarter-power reference anchored at the largest-epsilon point
  const guide: Series = {
    x: eps,
    y: eps.map((e) => err[0] * Math.pow(e / eps[0], 0.25)),
    color: "#888888",
    dash: "5,4",
    label: "slope 1/4 reference",
  };
  const data: Series = {
    x: eps,
    y: err,
    color: PALETTE[0],
    label: "sup error",
    markers: true,
  };
  const annotations: Annotation[] = [
    { fx: 0.06, fy: 0.1, text: `fit slope = ${slope.toFixed(3)}` },
  ];
  return renderFigure({
    title: "error vs Knudsen number",
    xlabel: "epsilon",
    ylabel: "sup_{|x|>=h} weighted L2 error",
    xscale: "log",
    yscale: "log",
    series: [data, guide],
    annotations,
  });
}

/** Wave profiles (vbar, u1bar, thetabar) at one or more times. */
export function renderProfile(inputs: string[]): string {
  if (inputs.length < 1) throw new Error("profile needs at least one input");
  const series: Series[] = [];
  inputs.forEach((file, i) => {
    const table = parseCsv(file, read(file));
    requireColumns(file, table, CSV_COLUMNS.wave);
    const x = column(table, "x");
    const tag = timeTag(file);
    series.push(
      { x, y: column(table, "vbar"), color: PALETTE[i % 6], label: `vbar ${tag}` },
      { x, y: column(table, "thetabar"), color: PALETTE[i % 6], dash: "4,3", label: `thetabar ${tag}` },
    );
  });
  return renderFigure({
    title: "viscous contact wave",
    xlabel: "x (Lagrangian)",
    ylabel: "vbar, thetabar",
    xscale: "linear",
    yscale: "linear",
    series,
  });
}

/** max|R1|, max|R2| vs 1+t on log-log axes with the -1 guide slope. */
export function renderResidual(inputs: string[]): string {
  if (inputs.length < 2) throw new Error("residual needs wave CSVs at >= 2 times");
  const ts: number[] = [];
  const r1: number[] = [];
  const r2: number[] = [];
  for (const file of inputs) {
    const table = parseCsv(file, read(file));
    requireColumns(file, table, CSV_COLUMNS.wave);
    const t = timeFromName(file);
    if (t === null) {
      throw new SchemaError(file, "cannot infer the time from the file name (expect ..._t{t}.csv)");
    }
    ts.push(1.0 + t);
    r1.push(Math.max(...column(table, "R1").map(Math.abs)));
    r2.push(Math.max(...column(table, "R2").map(Math.abs)));
  }
  const order = ts.map((_, i) => i).sort((a, b) => ts[a] - ts[b]);
  const tt = order.map((i) => ts[i]);
  const guide: Series = {
    x: tt,
    y: tt.map((v) => r1[order[0]] * (tt[0] / v)),
    color: "#888888",
    dash: "5,4",
    label: "slope -1 guide",
  };
  return renderFigure({
    title: "wave residual decay in time",
    xlabel: "1 + t",
    ylabel: "max |R|",
    xscale: "log",
    yscale: "log",
    series: [
      { x: tt, y: order.map((i) => r1[i]), color: PALETTE[0], label: "max|R1|", markers: true },
      { x: tt, y: order.map((i) => r2[i]), color: PALETTE[1], label: "max|R2|", markers: true },
      guide,
    ],
  });
}

/** Energy-functional trace E6(tau) with the growth ratio. */
export function renderEnergy(inputs: string[]): string {
  if (inputs.length !== 1) throw new Error("energy takes exactly one input");
  const file = inputs[0];
  const table = parseCsv(file, read(file));
  requireColumns(file, table, CSV_COLUMNS.energy);
  const tau = column(table, "tau");
  const series: Series[] = [
    { x: tau, y: column(table, "E6"), color: PALETTE[0], label: "E6", markers: true },
  ];
  if (table.fields.includes("growth_ratio")) {
    series.push({
      x: tau,
      y: column(table, "growth_ratio"),
      color: PALETTE[1],
      dash: "4,3",
      label: "E6 / (1+sqrt(eps) tau)^(1/2)",
    });
  }
  return renderFigure({
    title: "energy functional trace",
    xlabel: "tau",
    ylabel: "E6",
    xscale: "linear",
    yscale: "log",
    series,
  });
}

function timeFromName(file: string): number | null {
  const m = /_t([0-9.eE+-]+)\.csv$/.exec(path.basename(file));
  if (!m) return null;
  const v = Number(m[1]);
  return isFinite(v) ? v : null;
}

function timeTag(file: string): string {
  const t = timeFromName(file);
  return t === null ? path.basename(file) : `(t=${t})`;
}
