/** Minimal dependency-free SVG line chart. */

export interface ChartOptions {
  width?: number;
  height?: number;
  yMin?: number;
  yMax?: number;
  label?: string;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function lineChart(values: number[], options: ChartOptions = {}): SVGSVGElement {
  const width = options.width ?? 320;
  const height = options.height ?? 120;
  const pad = 18;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "trajectory-chart");
  if (options.label) {
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = options.label;
    svg.appendChild(title);
  }
  if (values.length === 0) {
    svg.dataset.points = "0";
    return svg;
  }
  const finite = values.filter((v) => Number.isFinite(v));
  const lo = options.yMin ?? Math.min(...finite, 0);
  const hi = options.yMax ?? Math.max(...finite, lo + 1e-9);
  const span = hi - lo || 1;
  const xStep = values.length > 1 ? (width - 2 * pad) / (values.length - 1) : 0;
  const toX = (i: number) => pad + i * xStep;
  const toY = (v: number) => height - pad - ((v - lo) / span) * (height - 2 * pad);

  const polyline = document.createElementNS(SVG_NS, "polyline");
  polyline.setAttribute("fill", "none");
  polyline.setAttribute("stroke", "currentColor");
  polyline.setAttribute("stroke-width", "1.5");
  polyline.setAttribute(
    "points",
    values.map((v, i) => `${toX(i).toFixed(1)},${toY(v).toFixed(1)}`).join(" ")
  );
  svg.appendChild(polyline);

  values.forEach((v, i) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", toX(i).toFixed(1));
    dot.setAttribute("cy", toY(v).toFixed(1));
    dot.setAttribute("r", "2.5");
    dot.setAttribute("class", "trajectory-point");
    dot.dataset.value = String(v);
    svg.appendChild(dot);
  });
  svg.dataset.points = String(values.length);
  return svg;
}
