// Server-sent-events subscription. The EventSource constructor is injected
// so tests (and non-browser hosts) can substitute a fake.

import type { DegenerateEvent, RecomputeEvent, Snapshot } from "./types.js";

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
}

export type EventSourceCtor = new (url: string) => EventSourceLike;

export interface PushHandlers {
  onDelta?: (snapshot: Snapshot) => void;
  onRecomputeStarted?: (event: RecomputeEvent) => void;
  onRecomputeDone?: (event: RecomputeEvent) => void;
  onDegenerate?: (event: DegenerateEvent) => void;
  onDropped?: () => void;
}

export interface PushSubscription {
  close(): void;
}

export function subscribePush(
  base: string,
  handlers: PushHandlers,
  EventSourceImpl: EventSourceCtor,
  resumeEpoch?: number,
): PushSubscription {
  const query = resumeEpoch !== undefined ? `?resume_epoch=${resumeEpoch}` : "";
  const source = new EventSourceImpl(`${base}/events${query}`);

  const on = <T>(type: string, handler?: (payload: T) => void) => {
    if (!handler) return;
    source.addEventListener(type, (event) => {
      handler(JSON.parse(event.data) as T);
    });
  };

  on<Snapshot>("msplot_delta", handlers.onDelta);
  on<RecomputeEvent>("recompute_started", handlers.onRecomputeStarted);
  on<RecomputeEvent>("recompute_done", handlers.onRecomputeDone);
  on<DegenerateEvent>("degenerate_warning", handlers.onDegenerate);
  if (handlers.onDropped) {
    source.addEventListener("dropped", () => handlers.onDropped!());
  }
  return { close: () => source.close() };
}
