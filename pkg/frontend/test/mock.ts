// Test doubles: a routing fetch mock that records every call, and an
// EventSource fake the tests can push events through.

export interface RecordedCall {
  method: string;
  url: string;
  body: unknown;
}

export interface Route {
  method: string;
  match: (url: string, body: unknown) => boolean;
  response: unknown;
  status?: number;
}

export function route(method: string, prefix: string, response: unknown, status = 200): Route {
  return { method, match: (url) => url.split("?")[0] === prefix, response, status };
}

export function makeMockFetch(routes: Route[]) {
  const calls: RecordedCall[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    calls.push({ method, url, body });
    for (const r of routes) {
      if (r.method === method && r.match(url, body)) {
        const payload = typeof r.response === "function" ? (r.response as any)(url, body) : r.response;
        return new Response(JSON.stringify(payload), {
          status: r.status ?? 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ detail: `no mock for ${method} ${url}` }), { status: 500 });
  };
  return { fetchFn, calls };
}

export class MockEventSource {
  static instances: MockEventSource[] = [];
  static reset(): void {
    MockEventSource.instances = [];
  }

  readonly listeners = new Map<string, Array<(event: MessageEvent) => void>>();
  closed = false;

  constructor(public readonly url: string) {
    MockEventSource.instances.push(this);
  }

  addEventListener(type: string, listener: (event: MessageEvent) => void): void {
    const existing = this.listeners.get(type) ?? [];
    existing.push(listener);
    this.listeners.set(type, existing);
  }

  close(): void {
    this.closed = true;
  }

  emit(type: string, payload: unknown): void {
    for (const listener of this.listeners.get(type) ?? []) {
      listener({ data: JSON.stringify(payload) } as MessageEvent);
    }
  }

  static latest(): MockEventSource {
    return MockEventSource.instances[MockEventSource.instances.length - 1];
  }
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
