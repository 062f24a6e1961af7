// FPCA views: the component curves, the scree plot, the perturbation-of-mean
// plot, and the smoothing parameter panel. Every plotted number comes from
// the server payload; this module never derives values.

import { paddedScale } from "./scale.js";
import type { FpcaRequest, FpcaResult } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const FPC_COLORS = ["steelblue", "darkorange", "seagreen", "purple", "gray"];
const DEFAULT_SHOWN_COMPONENTS = 3;

export interface FpcaViewCallbacks {
  onSelectFpc?: (component: number) => void;
  onRunFpca?: (config: FpcaRequest) => void;
}

export class FpcaView {
  private readonly fpcSvg: SVGSVGElement;
  private readonly screeSvg: SVGSVGElement;
  private readonly perturbationSvg: SVGSVGElement;
  private readonly buttons: HTMLDivElement;
  private readonly panel: HTMLFormElement;
  private result: FpcaResult | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly callbacks: FpcaViewCallbacks = {},
  ) {
    root.innerHTML = `
      <div class="fpca-panel-area"></div>
      <div class="fpc-buttons"></div>
      <svg class="fpc-plot" viewBox="0 0 640 200"></svg>
      <svg class="scree-plot" viewBox="0 0 240 160"></svg>
      <svg class="perturbation-plot" viewBox="0 0 640 200"></svg>
    `;
    this.fpcSvg = root.querySelector<SVGSVGElement>(".fpc-plot")!;
    this.screeSvg = root.querySelector<SVGSVGElement>(".scree-plot")!;
    this.perturbationSvg = root.querySelector<SVGSVGElement>(".perturbation-plot")!;
    this.buttons = root.querySelector<HTMLDivElement>(".fpc-buttons")!;
    this.panel = this.buildSmoothingPanel(root.querySelector<HTMLDivElement>(".fpca-panel-area")!);
  }

  private buildSmoothingPanel(host: HTMLElement): HTMLFormElement {
    const form = document.createElement("form");
    form.className = "smoothing-panel";
    form.innerHTML = `
      <label>basis
        <select name="basis"><option value="bspline">bspline</option><option value="fourier">fourier</option></select>
      </label>
      <label>number of basis <input name="n_basis" type="number" min="4" value="12"></label>
      <label>smoothing parameter
        <select name="lambda_mode"><option value="gcv">GCV</option><option value="fixed">fixed</option></select>
      </label>
      <label>fixed value <input name="lambda_value" type="number" min="0" step="any" value="1"></label>
      <button type="submit">run FPCA</button>
    `;
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      this.callbacks.onRunFpca?.(this.panelConfig());
    });
    host.appendChild(form);
    return form;
  }

  panelConfig(): FpcaRequest {
    const data = new FormData(this.panel);
    const mode = String(data.get("lambda_mode"));
    return {
      basis: String(data.get("basis")),
      n_basis: Number(data.get("n_basis")),
      lambda: mode === "gcv" ? "gcv" : Number(data.get("lambda_value")),
    };
  }

  renderResult(result: FpcaResult, shown = DEFAULT_SHOWN_COMPONENTS): void {
    this.result = result;
    this.renderFpcCurves(result, Math.min(shown, result.fpcs.length));
    this.renderScree(result);
    this.perturbationSvg.replaceChildren();
  }

  private renderFpcCurves(result: FpcaResult, shown: number): void {
    this.fpcSvg.replaceChildren();
    this.buttons.replaceChildren();
    const sx = paddedScale(result.times, 30, 610, 0);
    const values = result.fpcs.slice(0, shown).flatMap((f) => f.values);
    const sy = paddedScale(values, 180, 20);
    result.fpcs.slice(0, shown).forEach((fpc, i) => {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute(
        "points",
        fpc.values.map((v, t) => `${sx(result.times[t])},${sy(v)}`).join(" "),
      );
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", FPC_COLORS[i % FPC_COLORS.length]);
      line.dataset.component = String(fpc.index);
      line.dataset.values = JSON.stringify(fpc.values);
      line.dataset.eigenvalue = String(fpc.eigenvalue);
      this.fpcSvg.appendChild(line);

      const button = document.createElement("button");
      button.type = "button";
      button.className = "fpc-select";
      button.dataset.component = String(fpc.index);
      button.textContent = `FPC-${fpc.index}`;
      button.addEventListener("click", () => this.callbacks.onSelectFpc?.(fpc.index));
      this.buttons.appendChild(button);
    });
  }

  private renderScree(result: FpcaResult): void {
    this.screeSvg.replaceChildren();
    const n = result.scree.length;
    const barWidth = 200 / Math.max(n, 1);
    result.scree.forEach((row, i) => {
      const bar = document.createElementNS(SVG_NS, "rect");
      bar.setAttribute("x", String(20 + i * barWidth));
      bar.setAttribute("width", String(Math.max(barWidth - 4, 2)));
      const h = 120 * row.cumulative_ratio;
      bar.setAttribute("y", String(140 - h));
      bar.setAttribute("height", String(h));
      bar.setAttribute("fill", "steelblue");
      bar.dataset.index = String(row.index);
      bar.dataset.ratio = String(row.ratio);
      bar.dataset.cumulative = String(row.cumulative_ratio);
      this.screeSvg.appendChild(bar);
    });
  }

  /** Perturbation-of-mean plot for one component, straight from the payload. */
  renderPerturbation(component: number): void {
    if (!this.result) return;
    const pert = this.result.perturbations[component - 1];
    if (!pert) return;
    this.perturbationSvg.replaceChildren();
    const sx = paddedScale(pert.times, 30, 610, 0);
    const sy = paddedScale([...pert.mean, ...pert.plus, ...pert.minus], 180, 20);
    const draw = (values: number[], cls: string, stroke: string, dash: string | null) => {
      const line = document.createElementNS(SVG_NS, "polyline");
      line.setAttribute("class", cls);
      line.setAttribute(
        "points",
        values.map((v, t) => `${sx(pert.times[t])},${sy(v)}`).join(" "),
      );
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", stroke);
      if (dash) line.setAttribute("stroke-dasharray", dash);
      line.dataset.values = JSON.stringify(values);
      this.perturbationSvg.appendChild(line);
    };
    draw(pert.mean, "perturbation-mean", "navy", null);
    draw(pert.plus, "perturbation-plus", "crimson", "6 3");
    draw(pert.minus, "perturbation-minus", "darkcyan", "6 3");
    this.perturbationSvg.dataset.component = String(component);
  }

  clear(): void {
    this.result = null;
    this.fpcSvg.replaceChildren();
    this.screeSvg.replaceChildren();
    this.perturbationSvg.replaceChildren();
    this.buttons.replaceChildren();
  }
}
