// Data view: line chart of the selected series plus their mean function.

import { paddedScale } from "./scale.js";
import type { SeriesResponse } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface DataViewOptions {
  width: number;
  height: number;
  margin: number;
}

const DEFAULTS: DataViewOptions = { width: 640, height: 240, margin: 30 };

export class DataView {
  private readonly opts: DataViewOptions;

  constructor(
    private readonly svg: SVGSVGElement,
    options: Partial<DataViewOptions> = {},
  ) {
    this.opts = { ...DEFAULTS, ...options };
    svg.setAttribute("viewBox", `0 0 ${this.opts.width} ${this.opts.height}`);
  }

  render(data: SeriesResponse, highlights: ReadonlySet<string>): void {
    const { width, height, margin } = this.opts;
    const sx = paddedScale(data.timestamps, margin, width - margin, 0);
    const all = Object.values(data.series).flat().concat(data.mean);
    const sy = paddedScale(all, height - margin, margin);

    const toPoints = (values: number[]) =>
      values.map((v, i) => `${sx(data.timestamps[i])},${sy(v)}`).join(" ");

    this.svg.replaceChildren();
    for (const id of data.ids) {
      const values = data.series[id];
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("class", "series-line");
      line.setAttribute("points", toPoints(values));
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", highlights.has(id) ? "red" : "brown");
      line.setAttribute("stroke-width", highlights.has(id) ? "2" : "1");
      line.dataset.id = id;
      line.dataset.values = JSON.stringify(values);
      this.svg.appendChild(line);
    }
    const mean = document.createElementNS(SVG_NS, "polyline");
    mean.setAttribute("class", "mean-line");
    mean.setAttribute("points", toPoints(data.mean));
    mean.setAttribute("fill", "none");
    mean.setAttribute("stroke", "navy");
    mean.setAttribute("stroke-width", "2.5");
    mean.dataset.values = JSON.stringify(data.mean);
    this.svg.appendChild(mean);
  }

  clear(): void {
    this.svg.replaceChildren();
  }
}
