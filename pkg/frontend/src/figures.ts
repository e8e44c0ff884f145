/** The four figure renderers: three aggregate-curve figures and the 2x2
 * posterior-contour panel built from a density dump. */

import { contours } from "d3-contour";

import { ResultRow } from "./csv.js";
import { Scale, linearScale, logScale, tickLabel } from "./scales.js";
import { SvgBuilder, drawMarker, fmt } from "./svg.js";

export const NO_FILTER_RMSE = 3.6269;
export const BAYESIAN_RMSE = 0.5413;

export const FIGURE_IDS = [
  "banana-kld-vs-nx",
  "banana-kld-vs-sx",
  "l96-rmse-vs-nx",
  "banana-panels",
] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

/** Fixed per-filter styling so series look the same across figures. */
const FILTER_STYLE: Record<string, { color: string; marker: string; dash?: string }> = {
  enkf: { color: "#7b4fa6", marker: "square" },
  engmf: { color: "#4477aa", marker: "circle", dash: "6 3" },
  mfenkf: { color: "#ccbb44", marker: "plus" },
  mfengmf: { color: "#ee6677", marker: "cross", dash: "6 3" },
  aengmf: { color: "#4477aa", marker: "circle" },
  amfengmf: { color: "#ee6677", marker: "cross" },
  none: { color: "#222222", marker: "dot" },
};

function styleFor(filter: string) {
  return FILTER_STYLE[filter] ?? { color: "#555555", marker: "dot" };
}

export interface Series {
  filter: string;
  points: Array<[number, number]>;
}

/** Aggregate rows grouped into per-filter series over the chosen x field. */
export function extractSeries(rows: ResultRow[], xField: "n_x" | "s_x",
                              metricSuffix: string): Series[] {
  const byFilter = new Map<string, Map<number, number>>();
  for (const row of rows) {
    if (row.replicate !== -1 || !row.metric.endsWith(metricSuffix)) continue;
    if (row.value === "diverged") continue;
    const x = row[xField];
    if (!byFilter.has(row.filter)) byFilter.set(row.filter, new Map());
    byFilter.get(row.filter)!.set(x, row.value);
  }
  return [...byFilter.keys()].sort().map((filter) => ({
    filter,
    points: [...byFilter.get(filter)!.entries()].sort((a, b) => a[0] - b[0]),
  }));
}

interface Frame {
  svg: SvgBuilder;
  x: Scale;
  y: Scale;
  left: number;
  right: number;
  top: number;
  bottom: number;
}

function drawFrame(title: string, xLabel: string, yLabel: string,
                   xDomain: [number, number], yDomain: [number, number],
                   logX: boolean): Frame {
  const width = 640;
  const height = 420;
  const left = 64;
  const right = width - 170;
  const top = 36;
  const bottom = height - 48;
  const svg = new SvgBuilder(width, height);
  const x = (logX ? logScale : linearScale)(xDomain, [left, right]);
  const y = linearScale(yDomain, [bottom, top]);

  svg.text(left, 20, title, { "font-size": 14, "font-weight": "bold" });
  svg.line(left, bottom, right, bottom, { stroke: "#1a1a1a", "stroke-width": 1.5 });
  svg.line(left, top, left, bottom, { stroke: "#1a1a1a", "stroke-width": 1.5 });
  for (const tick of x.ticks()) {
    const px = x(tick);
    svg.line(px, bottom, px, bottom + 5, { stroke: "#1a1a1a" });
    svg.text(px, bottom + 18, tickLabel(tick), { "text-anchor": "middle", "font-size": 11 });
  }
  for (const tick of y.ticks()) {
    const py = y(tick);
    svg.line(left - 5, py, left, py, { stroke: "#1a1a1a" });
    svg.text(left - 8, py + 4, tickLabel(tick), { "text-anchor": "end", "font-size": 11 });
  }
  svg.text((left + right) / 2, height - 12, xLabel, { "text-anchor": "middle" });
  svg.open("g", { transform: `translate(16 ${(top + bottom) / 2}) rotate(-90)` });
  svg.text(0, 0, yLabel, { "text-anchor": "middle" });
  svg.close("g");
  return { svg, x, y, left, right, top, bottom };
}

function drawLegendEntry(frame: Frame, slot: number, label: string, color: string,
                         marker: string | null, dash?: string): void {
  const x0 = frame.right + 10;
  const y0 = frame.top + 10 + slot * 20;
  frame.svg.line(x0, y0, x0 + 24, y0, {
    stroke: color, "stroke-width": 2, ...(dash ? { "stroke-dasharray": dash } : {}),
  });
  if (marker) drawMarker(frame.svg, marker, x0 + 12, y0, 4, color);
  frame.svg.text(x0 + 30, y0 + 4, label, { "font-size": 11 });
}

function drawSeries(frame: Frame, series: Series[]): void {
  series.forEach((entry, slot) => {
    const style = styleFor(entry.filter);
    const pts = entry.points.map(
      ([xv, yv]) => [frame.x(xv), frame.y(yv)] as [number, number]);
    if (pts.length > 1) {
      frame.svg.polyline(pts, {
        stroke: style.color, "stroke-width": 2, class: `series series-${entry.filter}`,
        ...(style.dash ? { "stroke-dasharray": style.dash } : {}),
      });
    } else if (pts.length === 1) {
      // single point still gets a degenerate polyline so series counts are stable
      frame.svg.polyline(pts, {
        stroke: style.color, "stroke-width": 2, class: `series series-${entry.filter}`,
      });
    }
    for (const [px, py] of pts) drawMarker(frame.svg, style.marker, px, py, 4, style.color);
    drawLegendEntry(frame, slot, entry.filter, style.color, style.marker, style.dash);
  });
}

function domainOf(series: Series[], pick: 0 | 1, fallback: [number, number],
                  pad = 0.06): [number, number] {
  const values = series.flatMap((s) => s.points.map((p) => p[pick]));
  if (values.length === 0) return fallback;
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || Math.abs(hi) || 1;
  return [lo - pad * span, hi + pad * span];
}

export function renderCurveFigure(id: FigureId, rows: ResultRow[]): string {
  if (id === "l96-rmse-vs-nx") {
    const series = extractSeries(rows, "n_x", "rmse_mean");
    const yDomain = domainOf(series, 1, [0, 4]);
    const frame = drawFrame("Lorenz '96 filtering error", "theory ensemble size",
                            "mean spatio-temporal RMSE",
                            domainOf(series, 0, [4, 120], 0),
                            [Math.min(0, yDomain[0]), Math.max(yDomain[1], NO_FILTER_RMSE * 1.08)],
                            true);
    frame.svg.line(frame.left, frame.y(NO_FILTER_RMSE), frame.right, frame.y(NO_FILTER_RMSE),
                   { stroke: "#222222", "stroke-width": 1.5, class: "reference no-filter" });
    frame.svg.line(frame.left, frame.y(BAYESIAN_RMSE), frame.right, frame.y(BAYESIAN_RMSE),
                   { stroke: "#222222", "stroke-width": 1.5, "stroke-dasharray": "8 4",
                     class: "reference bayesian" });
    drawSeries(frame, series);
    drawLegendEntry(frame, series.length, `no filter (${NO_FILTER_RMSE})`, "#222222", null);
    drawLegendEntry(frame, series.length + 1, `Bayesian (${BAYESIAN_RMSE})`, "#222222",
                    null, "8 4");
    return frame.svg.render();
  }
  const xField = id === "banana-kld-vs-nx" ? "n_x" : "s_x";
  const series = extractSeries(rows, xField, "f_divergence_mean");
  const frame = drawFrame(
    "Static range-observation problem",
    xField === "n_x" ? "theory ensemble size" : "theory bandwidth scaling",
    "mean f-divergence",
    domainOf(series, 0, xField === "n_x" ? [0, 100] : [0, 3]),
    domainOf(series, 1, [0, 5]),
    false,
  );
  drawSeries(frame, series);
  return frame.svg.render();
}

// ---------------------------------------------------------------------------
// Banana panels
// ---------------------------------------------------------------------------

export interface DensityDump {
  grid: { x_min: number; x_max: number; y_min: number; y_max: number; nx: number; ny: number };
  log_true_posterior: number[][];
  prior_mean: number[];
  prior_cov: number[][];
  prior_samples: number[][];
  obs_value: number;
  obs_var: number;
  filters: Record<string, {
    log_density: number[][];
    samples: number[][];
    reduced_samples: number[] | null;
  }>;
}

/** Contour polylines of a gridded log-density at 1/2/3-sigma-equivalent levels. */
function densityContours(logGrid: number[][], grid: DensityDump["grid"]) {
  const { nx, ny } = grid;
  const values = new Float64Array(nx * ny);
  let peak = -Infinity;
  for (const row of logGrid) for (const v of row) peak = Math.max(peak, v);
  for (let iy = 0; iy < ny; iy++) {
    for (let ix = 0; ix < nx; ix++) {
      values[iy * nx + ix] = Math.exp(logGrid[ix][iy] - peak);
    }
  }
  const levels = [1, 2, 3].map((k) => Math.exp(-0.5 * k * k));
  const generator = contours().size([nx, ny]).thresholds(levels);
  const dx = (grid.x_max - grid.x_min) / (nx - 1);
  const dy = (grid.y_max - grid.y_min) / (ny - 1);
  return generator(Array.from(values)).map((multiPolygon) => ({
    level: multiPolygon.value,
    rings: multiPolygon.coordinates.flatMap((polygon) =>
      polygon.map((ring) =>
        ring.map(([gx, gy]) => [grid.x_min + gx * dx, grid.y_min + gy * dy] as [number, number]),
      ),
    ),
  }));
}

function ellipsePoints(mean: number[], cov: number[][], k: number): Array<[number, number]> {
  // principal axes from the 2x2 eigen-decomposition
  const [[a, b], [, c]] = [cov[0], cov[1]];
  const trace = a + c;
  const det = a * c - b * b;
  const disc = Math.sqrt(Math.max(trace * trace / 4 - det, 0));
  const l1 = trace / 2 + disc;
  const l2 = trace / 2 - disc;
  const theta = Math.abs(b) < 1e-14 ? (a >= c ? 0 : Math.PI / 2) : Math.atan2(l1 - a, b);
  const points: Array<[number, number]> = [];
  for (let i = 0; i <= 64; i++) {
    const t = (2 * Math.PI * i) / 64;
    const px = k * Math.sqrt(Math.max(l1, 0)) * Math.cos(t);
    const py = k * Math.sqrt(Math.max(l2, 0)) * Math.sin(t);
    points.push([
      mean[0] + px * Math.cos(theta) - py * Math.sin(theta),
      mean[1] + px * Math.sin(theta) + py * Math.cos(theta),
    ]);
  }
  return points;
}

const PANEL_ORDER = ["enkf", "engmf", "mfenkf", "mfengmf"];
const PANEL_TITLE: Record<string, string> = {
  enkf: "EnKF", engmf: "EnGMF", mfenkf: "MFEnKF", mfengmf: "MFEnGMF",
};

export function renderBananaPanels(dump: DensityDump): string {
  for (const name of PANEL_ORDER) {
    if (!dump.filters[name]) throw new Error(`density dump is missing filter ${name}`);
  }
  const panel = 300;
  const margin = 44;
  const width = 2 * panel + 3 * margin;
  const height = 2 * panel + 3 * margin;
  const svg = new SvgBuilder(width, height);
  const trueContours = densityContours(dump.log_true_posterior, dump.grid);

  PANEL_ORDER.forEach((name, index) => {
    const px0 = margin + (index % 2) * (panel + margin);
    const py0 = margin + Math.floor(index / 2) * (panel + margin);
    const x = linearScale([dump.grid.x_min, dump.grid.x_max], [px0, px0 + panel]);
    const y = linearScale([dump.grid.y_min, dump.grid.y_max], [py0 + panel, py0]);
    const place = (pts: Array<[number, number]>) =>
      pts.map(([vx, vy]) => [x(vx), y(vy)] as [number, number]);

    svg.open("g", { class: `panel panel-${name}` });
    svg.element("rect", {
      x: fmt(px0), y: fmt(py0), width: panel, height: panel,
      fill: "none", stroke: "#1a1a1a",
    });
    svg.text(px0 + panel / 2, py0 - 6, PANEL_TITLE[name],
             { "text-anchor": "middle", "font-weight": "bold" });

    for (const k of [1, 2, 3]) {
      svg.polyline(place(ellipsePoints(dump.prior_mean, dump.prior_cov, k)),
                   { stroke: "#4477aa", "stroke-width": 1.2, class: "prior-ellipse" });
    }
    const sigma = Math.sqrt(dump.obs_var);
    for (const k of [1, 2, 3]) {
      for (const sign of [-1, 1]) {
        const radius = dump.obs_value + sign * k * sigma;
        if (radius <= 0) continue;
        const circle: Array<[number, number]> = [];
        for (let i = 0; i <= 96; i++) {
          const t = (2 * Math.PI * i) / 96;
          circle.push([radius * Math.cos(t), radius * Math.sin(t)]);
        }
        svg.polyline(place(circle), {
          stroke: "#cc3311", "stroke-width": 1, "stroke-dasharray": "4 3",
          class: "likelihood-contour",
        });
      }
    }
    for (const contour of trueContours) {
      for (const ring of contour.rings) {
        svg.polyline(place(ring), {
          stroke: "#ccbb44", "stroke-width": 1.6, class: "true-posterior-contour",
        });
      }
    }
    for (const contour of densityContours(dump.filters[name].log_density, dump.grid)) {
      for (const ring of contour.rings) {
        svg.polyline(place(ring), {
          stroke: "#aa3377", "stroke-width": 1.4, "stroke-dasharray": "7 3 2 3",
          class: "filter-posterior-contour",
        });
      }
    }
    for (const [sx, sy] of dump.prior_samples) {
      svg.circle(x(sx), y(sy), 2, { fill: "#4477aa", class: "prior-sample" });
    }
    for (const [sx, sy] of dump.filters[name].samples) {
      svg.circle(x(sx), y(sy), 2, { fill: "#aa3377", class: "posterior-sample" });
    }
    svg.close("g");
  });
  return svg.render();
}

/** Density-weighted centroid of the dumped true posterior (diagnostic). */
export function dumpPosteriorCentroid(dump: DensityDump): [number, number] {
  const { nx, ny } = dump.grid;
  const dx = (dump.grid.x_max - dump.grid.x_min) / (nx - 1);
  const dy = (dump.grid.y_max - dump.grid.y_min) / (ny - 1);
  let mass = 0;
  let mx = 0;
  let my = 0;
  for (let ix = 0; ix < nx; ix++) {
    for (let iy = 0; iy < ny; iy++) {
      const weight = Math.exp(dump.log_true_posterior[ix][iy]);
      const gx = dump.grid.x_min + ix * dx;
      const gy = dump.grid.y_min + iy * dy;
      mass += weight;
      mx += weight * gx;
      my += weight * gy;
    }
  }
  return [mx / mass, my / mass];
}
