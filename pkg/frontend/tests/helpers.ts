// Shared fakes for the unit tests: a scriptable fetch and a WebSocket stub.

import type { WebSocketLike } from "../src/api.js";

export function jsonResponse(status: number, body: unknown, raw?: string): Response {
  const text = raw ?? JSON.stringify(body);
  return new Response(text, {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class FakeSocket implements WebSocketLike {
  static instances: FakeSocket[] = [];
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  closed = false;

  constructor(public url: string) {
    FakeSocket.instances.push(this);
  }

  close(): void {
    this.closed = true;
  }

  emit(doc: unknown): void {
    this.onmessage?.({ data: JSON.stringify(doc) });
  }

  drop(): void {
    this.onclose?.();
  }
}

export interface Route {
  method: string;
  path: string;
  reply: (body: unknown) => Response | Promise<Response>;
}

// routes fetch calls to handlers by "METHOD /path"; records every call
export class FakeFetch {
  calls: { method: string; path: string; body: unknown }[] = [];
  private handlers = new Map<string, Route["reply"]>();

  on(method: string, path: string, reply: Route["reply"]): void {
    this.handlers.set(`${method} ${path}`, reply);
  }

  fn = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body === undefined ? undefined : JSON.parse(String(init.body));
    this.calls.push({ method, path, body });
    const handler = this.handlers.get(`${method} ${path}`);
    if (handler === undefined) {
      return jsonResponse(404, { detail: `no handler for ${method} ${path}` });
    }
    return handler(body);
  };
}
