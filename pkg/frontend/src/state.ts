// View state and its legal transitions, kept as pure functions.

export type InfluenceMode = "top" | "bottom";

export interface ViewState {
  selection: string[];
  activeFpc: number | null;
  k: number;
  influenceMode: InfluenceMode;
  /** Minimum |score| for a series to be highlighted; null disables the filter. */
  threshold: number | null;
  epoch: number;
  fpcaLoaded: boolean;
}

export function initialViewState(): ViewState {
  return {
    selection: [],
    activeFpc: null,
    k: 10,
    influenceMode: "top",
    threshold: null,
    epoch: 0,
    fpcaLoaded: false,
  };
}

export function withSelection(state: ViewState, ids: string[]): ViewState {
  // a new selection invalidates any loaded FPCA result
  return { ...state, selection: [...ids], activeFpc: null, fpcaLoaded: false };
}

export function withFpcaLoaded(state: ViewState): ViewState {
  return { ...state, fpcaLoaded: true, activeFpc: null };
}

export function withActiveFpc(state: ViewState, component: number): ViewState {
  if (!state.fpcaLoaded) {
    throw new Error("cannot select an FPC before an FPCA result is loaded");
  }
  if (!Number.isInteger(component) || component < 1) {
    throw new Error(`invalid FPC index ${component}`);
  }
  return { ...state, activeFpc: component };
}

export function withK(state: ViewState, k: number): ViewState {
  if (!Number.isInteger(k) || k < 1) {
    throw new Error("k must be a positive integer");
  }
  return { ...state, k };
}

export function withInfluenceMode(state: ViewState, mode: InfluenceMode): ViewState {
  return { ...state, influenceMode: mode };
}

export function withThreshold(state: ViewState, threshold: number | null): ViewState {
  if (threshold !== null && !(threshold >= 0)) {
    throw new Error("threshold must be >= 0 or null");
  }
  return { ...state, threshold };
}

export function withEpoch(state: ViewState, epoch: number): ViewState {
  return { ...state, epoch };
}

/** Drop selected ids that no longer exist; returns the removed ones. */
export function pruneSelection(state: ViewState, live: ReadonlySet<string>): [ViewState, string[]] {
  const kept = state.selection.filter((id) => live.has(id));
  const dropped = state.selection.filter((id) => !live.has(id));
  if (dropped.length === 0) return [state, []];
  return [withSelection(state, kept), dropped];
}
