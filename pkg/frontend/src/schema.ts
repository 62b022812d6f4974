/**
 * Input contracts. The frontend consumes the solver's documented CSV/JSON
 * schemas and nothing else; violations surface as SchemaError with the
 * offending file and field named.
 */

import { z } from "zod";

export class SchemaError extends Error {
  constructor(public file: string, public detail: string) {
    super(`${file}: ${detail}`);
    this.name = "SchemaError";
  }
}

export const ConvergenceReportSchema = z.object({
  epsilons: z.array(z.number().positive()).min(3),
  h: z.number().positive(),
  sup_errors: z.array(z.number()).min(3),
  slope: z.number(),
  intercept: z.number(),
  fit_residual: z.number(),
  monotone: z.boolean(),
  snapshot_times: z.array(z.number()),
});

export type ConvergenceReport = z.infer<typeof ConvergenceReportSchema>;

export function parseConvergenceReport(file: string, text: string): ConvergenceReport {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(file, `not valid JSON (${(e as Error).message})`);
  }
  const res = ConvergenceReportSchema.safeParse(raw);
  if (!res.success) {
    const issue = res.error.issues[0];
    throw new SchemaError(file, `field '${issue.path.join(".")}': ${issue.message}`);
  }
  if (res.data.epsilons.length !== res.data.sup_errors.length) {
    throw new SchemaError(file, "'epsilons' and 'sup_errors' lengths differ");
  }
  return res.data;
}

// required CSV columns per figure kind
export const CSV_COLUMNS: Record<string, string[]> = {
  profile: ["eta", "theta_hat", "dtheta_hat"],
  wave: ["x", "vbar", "u1bar", "thetabar", "R1", "R2"],
  energy: ["tau", "E6"],
  convergence: ["epsilon", "sup_error", "slope", "fit_residual"],
};
