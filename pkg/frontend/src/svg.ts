/**
 * Minimal deterministic SVG figure builder: linear/log scales, axes with
 * ticks, polylines, markers, and text annotations. Numbers are formatted with
 * fixed precision so identical inputs give byte-identical files.
 */

export type ScaleKind = "linear" | "log";

export interface Series {
  x: number[];
  y: number[];
  color: string;
  label?: string;
  dash?: string;
  markers?: boolean;
}

export interface Annotation {
  /** position in figure fractions [0,1] of the plot box */
  fx: number;
  fy: number;
  text: string;
  color?: string;
}

export interface FigureSpec {
  title: string;
  xlabel: string;
  ylabel: string;
  xscale: ScaleKind;
  yscale: ScaleKind;
  series: Series[];
  annotations?: Annotation[];
  width?: number;
  height?: number;
}

const MARGIN = { left: 64, right: 16, top: 28, bottom: 44 };

export function fmt(v: number): string {
  if (!isFinite(v)) return "0";
  const s = v.toPrecision(6);
  return s.includes(".") || s.includes("e")
    ? s.replace(/\.?0+($|e)/, "$1")
    : s;
}

class Scale {
  constructor(
    public kind: ScaleKind,
    public lo: number,
    public hi: number,
    public out0: number,
    public out1: number,
  ) {
    if (kind === "log" && (lo <= 0 || hi <= 0)) {
      throw new Error("log scale needs positive domain");
    }
    if (lo === hi) {
      // degenerate (e.g. a flat profile): pad symmetrically
      const pad = kind === "log" ? Math.abs(lo) * 0.5 : Math.abs(lo) * 0.1 + 1.0;
      this.lo = kind === "log" ? lo / 2 : lo - pad;
      this.hi = kind === "log" ? hi * 2 : hi + pad;
    }
  }

  map(v: number): number {
    const t =
      this.kind === "log"
        ? (Math.log(v) - Math.log(this.lo)) / (Math.log(this.hi) - Math.log(this.lo))
        : (v - this.lo) / (this.hi - this.lo);
    return this.out0 + t * (this.out1 - this.out0);
  }

  ticks(n = 5): number[] {
    if (this.kind === "log") {
      const d0 = Math.ceil(Math.log10(this.lo) - 1e-9);
      const d1 = Math.floor(Math.log10(this.hi) + 1e-9);
      const out: number[] = [];
      for (let d = d0; d <= d1; d++) out.push(Math.pow(10, d));
      if (out.length >= 2) return out;
      return [this.lo, Math.sqrt(this.lo * this.hi), this.hi];
    }
    const span = this.hi - this.lo;
    const step = niceStep(span / n);
    const t0 = Math.ceil(this.lo / step) * step;
    const out: number[] = [];
    for (let v = t0; v <= this.hi + 1e-12 * span; v += step) out.push(v);
    return out;
  }
}

function niceStep(raw: number): number {
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  const r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2 * mag;
  if (r < 7.5) return 5 * mag;
  return 10 * mag;
}

function domain(vals: number[], kind: ScaleKind): [number, number] {
  const sel = kind === "log" ? vals.filter((v) => v > 0) : vals;
  if (sel.length === 0) throw new Error("no plottable values for log scale");
  return [Math.min(...sel), Math.max(...sel)];
}

export function renderFigure(spec: FigureSpec): string {
  const width = spec.width ?? 640;
  const height = spec.height ?? 420;
  const x0 = MARGIN.left;
  const x1 = width - MARGIN.right;
  const y0 = height - MARGIN.bottom;
  const y1 = MARGIN.top;

  const allx = spec.series.flatMap((s) => s.x);
  const ally = spec.series.flatMap((s) => s.y);
  const [xlo, xhi] = domain(allx, spec.xscale);
  const [ylo, yhi] = domain(ally, spec.yscale);
  const xs = new Scale(spec.xscale, xlo, xhi, x0, x1);
  const ys = new Scale(spec.yscale, ylo, yhi, y0, y1);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="16" font-size="13" text-anchor="middle">${esc(spec.title)}</text>`,
  );

  // axes
  parts.push(
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black" stroke-width="1"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black" stroke-width="1"/>`,
  );
  for (const t of xs.ticks()) {
    const px = fmt(xs.map(t));
    parts.push(
      `<line x1="${px}" y1="${y0}" x2="${px}" y2="${y0 + 4}" stroke="black"/>`,
      `<text x="${px}" y="${y0 + 16}" font-size="10" text-anchor="middle">${fmt(t)}</text>`,
    );
  }
  for (const t of ys.ticks()) {
    const py = fmt(ys.map(t));
    parts.push(
      `<line x1="${x0 - 4}" y1="${py}" x2="${x0}" y2="${py}" stroke="black"/>`,
      `<text x="${x0 - 6}" y="${py}" font-size="10" text-anchor="end" dominant-baseline="middle">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${height - 8}" font-size="11" text-anchor="middle">${esc(spec.xlabel)}</text>`,
    `<text x="14" y="${(y0 + y1) / 2}" font-size="11" text-anchor="middle" transform="rotate(-90 14 ${(y0 + y1) / 2})">${esc(spec.ylabel)}</text>`,
  );

  // series
  spec.series.forEach((s, i) => {
    const pts = s.x
      .map((vx, k) => [vx, s.y[k]] as [number, number])
      .filter(([vx, vy]) =>
        (spec.xscale !== "log" || vx > 0) && (spec.yscale !== "log" || vy > 0),
      );
    const path = pts.map(([vx, vy]) => `${fmt(xs.map(vx))},${fmt(ys.map(vy))}`).join(" ");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${s.color}" stroke-width="1.5"${dash}/>`,
    );
    if (s.markers) {
      for (const [vx, vy] of pts) {
        parts.push(
          `<circle cx="${fmt(xs.map(vx))}" cy="${fmt(ys.map(vy))}" r="3" fill="${s.color}"/>`,
        );
      }
    }
    if (s.label) {
      const ly = y1 + 14 + 14 * i;
      parts.push(
        `<line x1="${x1 - 110}" y1="${ly - 4}" x2="${x1 - 90}" y2="${ly - 4}" stroke="${s.color}" stroke-width="2"${dash}/>`,
        `<text x="${x1 - 85}" y="${ly}" font-size="10">${esc(s.label)}</text>`,
      );
    }
  });

  for (const a of spec.annotations ?? []) {
    const px = x0 + a.fx * (x1 - x0);
    const py = y1 + a.fy * (y0 - y1);
    parts.push(
      `<text x="${fmt(px)}" y="${fmt(py)}" font-size="12" fill="${a.color ?? "black"}">${esc(a.text)}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}
