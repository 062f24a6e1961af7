// Browser bootstrap: mount the app and wire pointer-driven lasso selection.

import { ApiClient } from "./api.js";
import { App } from "./app.js";
import type { Point } from "./lasso.js";

function wireLasso(app: App, svg: SVGSVGElement): void {
  let polygon: Point[] = [];
  let drawing = false;

  const toLocal = (event: PointerEvent): Point => {
    const rect = svg.getBoundingClientRect();
    const viewBox = svg.viewBox.baseVal;
    const x = ((event.clientX - rect.left) / rect.width) * viewBox.width;
    const y = ((event.clientY - rect.top) / rect.height) * viewBox.height;
    return [x, y];
  };

  svg.addEventListener("pointerdown", (event) => {
    drawing = true;
    polygon = [toLocal(event)];
  });
  svg.addEventListener("pointermove", (event) => {
    if (drawing) polygon.push(toLocal(event));
  });
  svg.addEventListener("pointerup", () => {
    drawing = false;
    if (polygon.length >= 3) void app.lassoSelect(polygon);
    polygon = [];
  });
}

function wireControls(app: App, root: HTMLElement): void {
  const controls = document.createElement("div");
  controls.className = "view-controls";
  controls.innerHTML = `
    <label>top-k <input class="k-input" type="number" min="1" value="10"></label>
    <label>mode
      <select class="mode-input"><option value="top">most influential</option><option value="bottom">least influential</option></select>
    </label>
    <label>score threshold <input class="threshold-input" type="range" min="0" max="100" value="0"></label>
  `;
  root.prepend(controls);
  controls.querySelector<HTMLInputElement>(".k-input")!.addEventListener("change", (e) => {
    void app.setK(Number((e.target as HTMLInputElement).value));
  });
  controls.querySelector<HTMLSelectElement>(".mode-input")!.addEventListener("change", (e) => {
    void app.setInfluenceMode((e.target as HTMLSelectElement).value as "top" | "bottom");
  });
  controls.querySelector<HTMLInputElement>(".threshold-input")!.addEventListener("change", (e) => {
    const raw = Number((e.target as HTMLInputElement).value);
    void app.setThreshold(raw > 0 ? raw : null);
  });
}

const root = document.getElementById("app");
if (root) {
  const app = new App({
    root,
    api: new ApiClient(""),
    eventSource: window.EventSource as unknown as typeof window.EventSource,
  });
  void app.start().then(() => {
    wireLasso(app, root.querySelector<SVGSVGElement>(".msplot")!);
    wireControls(app, root);
  });
}
