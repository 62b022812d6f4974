export { render, renderRate, renderProfile, renderResidual, renderEnergy } from "./render";
export { parseCsv, requireColumns, column } from "./csv";
export { SchemaError, parseConvergenceReport, CSV_COLUMNS } from "./schema";
export { renderFigure, fmt } from "./svg";
