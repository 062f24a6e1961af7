// Application wiring: one engine snapshot + one selection drive four linked
// views. The client renders exactly what the server sends; selections,
// rankings and perturbations all round-trip through documented endpoints.

import { ApiClient } from "./api.js";
import { DataView } from "./dataview.js";
import { subscribePush, type EventSourceCtor, type PushSubscription } from "./events.js";
import { FpcaView } from "./fpcaview.js";
import { idsInPolygon, type Point } from "./lasso.js";
import { MsPlotView } from "./msplot.js";
import { SensorGridView } from "./grid.js";
import {
  initialViewState,
  pruneSelection,
  withActiveFpc,
  withEpoch,
  withFpcaLoaded,
  withInfluenceMode,
  withK,
  withSelection,
  withThreshold,
  type InfluenceMode,
  type ViewState,
} from "./state.js";
import type { FpcaRequest, FpcaResult, Snapshot } from "./types.js";

export interface AppDeps {
  root: HTMLElement;
  api: ApiClient;
  eventSource?: EventSourceCtor;
  base?: string;
}

export class App {
  readonly api: ApiClient;
  state: ViewState = initialViewState();
  snapshot: Snapshot | null = null;
  fpcaResult: FpcaResult | null = null;
  highlights: ReadonlySet<string> = new Set();

  readonly msplot: MsPlotView;
  readonly dataView: DataView;
  readonly fpcaView: FpcaView;
  readonly grid: SensorGridView;

  private readonly root: HTMLElement;
  private readonly eventSourceCtor?: EventSourceCtor;
  private readonly base: string;
  private subscription: PushSubscription | null = null;
  private fpcaChain: Promise<void> = Promise.resolve();
  private fpcaTicket = 0;

  constructor(deps: AppDeps) {
    this.root = deps.root;
    this.api = deps.api;
    this.eventSourceCtor = deps.eventSource;
    this.base = deps.base ?? "";
    this.root.innerHTML = `
      <div class="status-bar"><span class="status"></span><span class="notice-area"></span></div>
      <svg class="msplot"></svg>
      <div class="grid-root"></div>
      <svg class="dataview"></svg>
      <div class="fpca-root"></div>
    `;
    this.msplot = new MsPlotView(this.root.querySelector<SVGSVGElement>(".msplot")!);
    this.dataView = new DataView(this.root.querySelector<SVGSVGElement>(".dataview")!);
    this.fpcaView = new FpcaView(this.root.querySelector<HTMLElement>(".fpca-root")!, {
      onSelectFpc: (component) => void this.selectFpc(component),
      onRunFpca: (config) => void this.runFpca(config),
    });
    this.grid = new SensorGridView(this.root.querySelector<HTMLElement>(".grid-root")!, (series) =>
      void this.applySelection(series),
    );
  }

  async start(): Promise<void> {
    await this.refresh();
    this.grid.render(await this.api.layout());
    this.subscribe();
  }

  private subscribe(resumeEpoch?: number): void {
    if (!this.eventSourceCtor) return;
    this.subscription?.close();
    this.subscription = subscribePush(
      this.base,
      {
        onDelta: (snapshot) => void this.onDelta(snapshot),
        onRecomputeStarted: () => this.setStatus("recomputing in the background"),
        onRecomputeDone: () => {
          this.setStatus("");
          void this.refresh();
        },
        onDegenerate: (event) =>
          this.showNotice(`degenerate cross-section at t=${event.t_index} (${event.degenerate_count} total)`),
        onDropped: () => {
          // resume with a fresh snapshot if the epoch moved while we were slow
          this.subscribe(this.state.epoch);
        },
      },
      this.eventSourceCtor,
      resumeEpoch,
    );
  }

  async refresh(): Promise<void> {
    const snapshot = await this.api.msplot();
    this.applySnapshot(snapshot);
  }

  private async onDelta(snapshot: Snapshot): Promise<void> {
    if (this.snapshot !== null && snapshot.epoch !== this.state.epoch) {
      // cross-epoch push: always re-read the authoritative snapshot
      await this.refresh();
      return;
    }
    this.applySnapshot(snapshot);
  }

  private applySnapshot(snapshot: Snapshot): void {
    this.snapshot = snapshot;
    this.state = withEpoch(this.state, snapshot.epoch);
    const live = new Set(snapshot.points.map((p) => p.id));
    const [pruned, dropped] = pruneSelection(this.state, live);
    if (dropped.length > 0) {
      this.state = pruned;
      this.highlights = new Set();
      this.showNotice(`selection dropped missing series: ${dropped.join(", ")}`);
    }
    this.msplot.render(snapshot, new Set(this.state.selection), this.highlights);
  }

  async lassoSelect(polygon: Point[]): Promise<void> {
    const ids = idsInPolygon(this.msplot.screenPoints(), polygon);
    if (ids.length === 0) {
      this.showNotice("lasso selected nothing; draw around some circles");
      return;
    }
    await this.applySelection(ids);
  }

  async applySelection(ids: string[]): Promise<void> {
    if (this.snapshot) {
      const live = new Set(this.snapshot.points.map((p) => p.id));
      ids = ids.filter((id) => live.has(id));
    }
    this.state = withSelection(this.state, ids);
    this.highlights = new Set();
    this.fpcaResult = null;
    this.fpcaView.clear();
    if (this.snapshot) {
      this.msplot.render(this.snapshot, new Set(ids), this.highlights);
    }
    if (ids.length > 0) {
      this.dataView.render(await this.api.series(ids), this.highlights);
    } else {
      this.dataView.clear();
    }
  }

  /** Run FPCA over the current selection; requests are serialized per view. */
  runFpca(config: FpcaRequest = {}): Promise<void> {
    const ticket = ++this.fpcaTicket;
    this.fpcaChain = this.fpcaChain.then(async () => {
      if (ticket !== this.fpcaTicket) return; // superseded while queued
      if (this.state.selection.length < 2) {
        this.showNotice("select at least two series before running FPCA");
        return;
      }
      const result = await this.api.fpca(this.state.selection, config);
      if (ticket !== this.fpcaTicket) return; // superseded while in flight
      this.fpcaResult = result;
      this.state = withFpcaLoaded(this.state);
      this.fpcaView.renderResult(result);
    });
    return this.fpcaChain;
  }

  /** Highlight the top-k (or bottom-k) series for one FPC, via the server. */
  async selectFpc(component: number): Promise<void> {
    if (!this.state.fpcaLoaded || !this.fpcaResult) {
      this.showNotice("run FPCA before selecting a component");
      return;
    }
    this.state = withActiveFpc(this.state, component);
    const response = await this.api.topk(
      this.state.selection,
      component,
      this.state.k,
      this.state.influenceMode,
      this.state.threshold ?? undefined,
    );
    this.highlights = new Set(response.ranking);
    if (this.snapshot) {
      this.msplot.render(this.snapshot, new Set(this.state.selection), this.highlights);
    }
    this.dataView.render(await this.api.series(this.state.selection), this.highlights);
    this.fpcaView.renderPerturbation(component);
  }

  async setK(k: number): Promise<void> {
    this.state = withK(this.state, k);
    await this.reapplyActiveFpc();
  }

  async setInfluenceMode(mode: InfluenceMode): Promise<void> {
    this.state = withInfluenceMode(this.state, mode);
    await this.reapplyActiveFpc();
  }

  async setThreshold(threshold: number | null): Promise<void> {
    this.state = withThreshold(this.state, threshold);
    await this.reapplyActiveFpc();
  }

  private async reapplyActiveFpc(): Promise<void> {
    if (this.state.activeFpc !== null) {
      await this.selectFpc(this.state.activeFpc);
    }
  }

  setStatus(text: string): void {
    this.root.querySelector(".status")!.textContent = text;
  }

  showNotice(text: string): void {
    this.root.querySelector(".notice-area")!.textContent = text;
  }

  get noticeText(): string {
    return this.root.querySelector(".notice-area")!.textContent ?? "";
  }

  stop(): void {
    this.subscription?.close();
    this.subscription = null;
  }
}
