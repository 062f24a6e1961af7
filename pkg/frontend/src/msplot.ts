// MS-plot scatter. Teal central circles, pink outlying, brown when selected,
// red outlines for top-k highlights. Updates inside one epoch move existing
// circles (animated, under 500ms) without reordering them; an epoch change
// rebuilds the plot and the epoch badge.

import { paddedScale, type Scale } from "./scale.js";
import type { ScreenPoint } from "./lasso.js";
import type { MsPointDto, Snapshot } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const COLORS = {
  central: "teal",
  outlying: "pink",
  selected: "brown",
  highlight: "red",
} as const;

export interface MsPlotOptions {
  width: number;
  height: number;
  margin: number;
  transitionMs: number;
}

const DEFAULTS: MsPlotOptions = { width: 640, height: 480, margin: 40, transitionMs: 400 };

export class MsPlotView {
  private readonly opts: MsPlotOptions;
  private readonly circles = new Map<string, SVGCircleElement>();
  private readonly layer: SVGGElement;
  private readonly badge: SVGTextElement;
  private epoch = -1;
  private sx: Scale = (v) => v;
  private sy: Scale = (v) => v;
  private positions = new Map<string, { x: number; y: number }>();

  constructor(
    private readonly svg: SVGSVGElement,
    options: Partial<MsPlotOptions> = {},
  ) {
    this.opts = { ...DEFAULTS, ...options };
    svg.setAttribute("viewBox", `0 0 ${this.opts.width} ${this.opts.height}`);
    this.layer = document.createElementNS(SVG_NS, "g");
    this.layer.setAttribute("class", "msplot-points");
    this.badge = document.createElementNS(SVG_NS, "text");
    this.badge.setAttribute("class", "epoch-badge");
    this.badge.setAttribute("x", String(this.opts.width - this.opts.margin));
    this.badge.setAttribute("y", "20");
    this.badge.setAttribute("text-anchor", "end");
    svg.appendChild(this.layer);
    svg.appendChild(this.badge);
  }

  render(snapshot: Snapshot, selected: ReadonlySet<string>, highlights: ReadonlySet<string>): void {
    if (snapshot.epoch !== this.epoch) {
      // cross-epoch updates always start from a clean plot
      this.layer.replaceChildren();
      this.circles.clear();
      this.epoch = snapshot.epoch;
      this.badge.textContent = `epoch ${snapshot.epoch}`;
    }

    const { width, height, margin } = this.opts;
    this.sx = paddedScale(snapshot.points.map((p) => p.mo), margin, width - margin);
    this.sy = paddedScale(snapshot.points.map((p) => p.vo), height - margin, margin);

    const liveIds = new Set<string>();
    this.positions = new Map();
    for (const point of snapshot.points) {
      liveIds.add(point.id);
      let circle = this.circles.get(point.id);
      if (!circle) {
        circle = document.createElementNS(SVG_NS, "circle");
        circle.dataset.id = point.id;
        circle.style.transition = `cx ${this.opts.transitionMs}ms, cy ${this.opts.transitionMs}ms`;
        this.layer.appendChild(circle); // new ids append; existing order is preserved
        this.circles.set(point.id, circle);
      }
      this.applyPoint(circle, point, selected.has(point.id), highlights.has(point.id));
    }
    for (const [id, circle] of this.circles) {
      if (!liveIds.has(id)) {
        circle.remove();
        this.circles.delete(id);
      }
    }
  }

  private applyPoint(
    circle: SVGCircleElement,
    point: MsPointDto,
    isSelected: boolean,
    isHighlighted: boolean,
  ): void {
    const x = this.sx(point.mo);
    const y = this.sy(point.vo);
    this.positions.set(point.id, { x, y });
    circle.setAttribute("cx", String(x));
    circle.setAttribute("cy", String(y));
    circle.setAttribute("r", isSelected ? "7" : "4");
    circle.setAttribute("fill", isSelected ? COLORS.selected : COLORS[point.label]);
    circle.setAttribute("stroke", isHighlighted ? COLORS.highlight : "none");
    circle.setAttribute("stroke-width", isHighlighted ? "2.5" : "0");
    // raw server values ride along for traceability and tooltips
    circle.dataset.mo = String(point.mo);
    circle.dataset.vo = String(point.vo);
    circle.dataset.label = point.label;
    circle.dataset.approximate = String(point.approximate);
  }

  /** Current circle positions in screen coordinates, for the lasso. */
  screenPoints(): ScreenPoint[] {
    return [...this.positions.entries()].map(([id, pos]) => ({ id, x: pos.x, y: pos.y }));
  }

  get currentEpoch(): number {
    return this.epoch;
  }

  /** DOM order of the point ids, to assert the no-reorder contract. */
  domOrder(): string[] {
    return [...this.layer.children].map((el) => (el as SVGCircleElement).dataset.id ?? "");
  }
}
