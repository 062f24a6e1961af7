import { describe, expect, it } from "vitest";

import {
  initialViewState,
  pruneSelection,
  withActiveFpc,
  withFpcaLoaded,
  withK,
  withSelection,
  withThreshold,
} from "../src/state.js";

describe("view state transitions", () => {
  it("starts with the documented defaults", () => {
    const s = initialViewState();
    expect(s.k).toBe(10);
    expect(s.influenceMode).toBe("top");
    expect(s.selection).toEqual([]);
    expect(s.activeFpc).toBeNull();
  });

  it("selection change invalidates the loaded FPCA", () => {
    let s = withFpcaLoaded(withSelection(initialViewState(), ["a", "b"]));
    s = withActiveFpc(s, 2);
    s = withSelection(s, ["c"]);
    expect(s.fpcaLoaded).toBe(false);
    expect(s.activeFpc).toBeNull();
  });

  it("refuses an active FPC before a result is loaded", () => {
    expect(() => withActiveFpc(initialViewState(), 1)).toThrow(/before an FPCA result/);
  });

  it("enforces k >= 1", () => {
    expect(() => withK(initialViewState(), 0)).toThrow();
    expect(withK(initialViewState(), 3).k).toBe(3);
  });

  it("threshold must be nonnegative or null", () => {
    expect(() => withThreshold(initialViewState(), -1)).toThrow();
    expect(withThreshold(initialViewState(), null).threshold).toBeNull();
  });

  it("prunes ids that vanished from the panel", () => {
    const s = withSelection(initialViewState(), ["a", "b", "c"]);
    const [pruned, dropped] = pruneSelection(s, new Set(["a", "c"]));
    expect(pruned.selection).toEqual(["a", "c"]);
    expect(dropped).toEqual(["b"]);
    const [unchanged, none] = pruneSelection(pruned, new Set(["a", "c"]));
    expect(unchanged).toBe(pruned);
    expect(none).toEqual([]);
  });
});
