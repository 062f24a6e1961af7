// Sensor-space view: a grid heatmap of per-cell outlier counts. Hidden with
// a notice when the server has no layout; clicking a cell pre-selects its
// series in the MS plot.

import type { LayoutResponse } from "./types.js";

export class SensorGridView {
  constructor(
    private readonly root: HTMLElement,
    private readonly onCellClick: (series: string[]) => void,
  ) {}

  render(layout: LayoutResponse | null): void {
    this.root.replaceChildren();
    if (layout === null || layout.cells.length === 0) {
      const notice = document.createElement("p");
      notice.className = "grid-notice";
      notice.textContent = "No sensor layout configured; spatial view hidden.";
      this.root.appendChild(notice);
      return;
    }
    const maxCount = Math.max(...layout.cells.map((c) => c.outlier_count), 1);
    const grid = document.createElement("div");
    grid.className = "sensor-grid";
    const rows = Math.max(...layout.cells.map((c) => c.row)) + 1;
    const cols = Math.max(...layout.cells.map((c) => c.col)) + 1;
    grid.style.display = "grid";
    grid.style.gridTemplateRows = `repeat(${rows}, 48px)`;
    grid.style.gridTemplateColumns = `repeat(${cols}, 48px)`;
    for (const cell of layout.cells) {
      const div = document.createElement("div");
      div.className = "grid-cell";
      div.style.gridRow = String(cell.row + 1);
      div.style.gridColumn = String(cell.col + 1);
      const intensity = cell.outlier_count / maxCount;
      div.style.backgroundColor = `rgba(178, 34, 34, ${intensity.toFixed(3)})`;
      div.dataset.id = cell.id;
      div.dataset.count = String(cell.outlier_count);
      div.dataset.intensity = intensity.toFixed(3);
      div.title = `${cell.id}: ${cell.outlier_count} outliers`;
      div.addEventListener("click", () => this.onCellClick(cell.series));
      grid.appendChild(div);
    }
    this.root.appendChild(grid);
  }
}
