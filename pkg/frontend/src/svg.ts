/** Deterministic SVG assembly: fixed precision, no timestamps, stable order. */

export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`cannot format non-finite coordinate ${value}`);
  }
  const rounded = value.toFixed(3);
  return rounded === "-0.000" ? "0.000" : rounded;
}

export interface Attrs {
  [key: string]: string | number;
}

function attrText(attrs: Attrs): string {
  return Object.keys(attrs)
    .sort()
    .map((key) => ` ${key}="${attrs[key]}"`)
    .join("");
}

export class SvgBuilder {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
    );
    this.parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  }

  open(tag: string, attrs: Attrs = {}): void {
    this.parts.push(`<${tag}${attrText(attrs)}>`);
  }

  close(tag: string): void {
    this.parts.push(`</${tag}>`);
  }

  element(tag: string, attrs: Attrs): void {
    this.parts.push(`<${tag}${attrText(attrs)}/>`);
  }

  line(x1: number, y1: number, x2: number, y2: number, attrs: Attrs): void {
    this.element("line", { x1: fmt(x1), y1: fmt(y1), x2: fmt(x2), y2: fmt(y2), ...attrs });
  }

  polyline(points: Array<[number, number]>, attrs: Attrs): void {
    const path = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.element("polyline", { points: path, fill: "none", ...attrs });
  }

  path(d: string, attrs: Attrs): void {
    this.element("path", { d, ...attrs });
  }

  circle(cx: number, cy: number, r: number, attrs: Attrs): void {
    this.element("circle", { cx: fmt(cx), cy: fmt(cy), r: fmt(r), ...attrs });
  }

  text(x: number, y: number, content: string, attrs: Attrs = {}): void {
    this.open("text", { x: fmt(x), y: fmt(y), "font-size": 12, fill: "#1a1a1a", ...attrs });
    this.parts.push(escapeText(content));
    this.close("text");
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

export function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** Marker glyphs keyed by shape name, drawn centered on a data point. */
export function drawMarker(
  svg: SvgBuilder, shape: string, x: number, y: number, size: number, color: string,
): void {
  const s = size;
  switch (shape) {
    case "circle":
      svg.circle(x, y, s, { fill: "none", stroke: color, "stroke-width": 1.5 });
      break;
    case "cross":
      svg.line(x - s, y - s, x + s, y + s, { stroke: color, "stroke-width": 1.5 });
      svg.line(x - s, y + s, x + s, y - s, { stroke: color, "stroke-width": 1.5 });
      break;
    case "plus":
      svg.line(x - s, y, x + s, y, { stroke: color, "stroke-width": 1.5 });
      svg.line(x, y - s, x, y + s, { stroke: color, "stroke-width": 1.5 });
      break;
    case "square":
      svg.element("rect", {
        x: fmt(x - s), y: fmt(y - s), width: fmt(2 * s), height: fmt(2 * s),
        fill: "none", stroke: color, "stroke-width": 1.5,
      });
      break;
    case "diamond": {
      const pts = [[x, y - s], [x + s, y], [x, y + s], [x - s, y]]
        .map(([px, py]) => `${fmt(px)},${fmt(py)}`).join(" ");
      svg.element("polygon", { points: pts, fill: "none", stroke: color, "stroke-width": 1.5 });
      break;
    }
    default:
      svg.circle(x, y, s * 0.6, { fill: color });
  }
}
