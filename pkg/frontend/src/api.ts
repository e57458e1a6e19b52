// REST + WebSocket client for the session service. fetch and WebSocket are
// injected so the same code runs in a browser and under node tests.

import type {
  NextResult,
  Reference,
  ResponseAck,
  Results,
  SessionInfo,
  Snapshot,
  TaskName,
  TrialRecord,
} from "./types.js";

export interface WebSocketLike {
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  close(): void;
}

export type WebSocketCtor = new (url: string) => WebSocketLike;
export type FetchFn = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function reject(res: Response): Promise<never> {
  let detail = res.statusText;
  try {
    const doc = await res.json();
    if (typeof doc.detail === "string") detail = doc.detail;
    else if (doc.detail) detail = JSON.stringify(doc.detail);
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ServiceError(res.status, detail);
}

export class ServiceClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchFn,
    private wsCtor: WebSocketCtor,
  ) {}

  private async get(path: string): Promise<Response> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) await reject(res);
    return res;
  }

  private async send(method: string, path: string, body?: unknown): Promise<Response> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!res.ok) await reject(res);
    return res;
  }

  async reference(): Promise<Reference> {
    return (await this.get("/reference")).json();
  }

  async createSession(opts: {
    task: TaskName;
    seed: number;
    participant?: string;
    repetitions?: number;
    isi_s?: number;
  }): Promise<SessionInfo> {
    return (await this.send("POST", "/sessions", opts)).json();
  }

  async nextTrial(session: string): Promise<NextResult> {
    return (await this.send("POST", `/sessions/${session}/next`)).json();
  }

  // the returned rtText is the service's literal rt_s token from the JSON
  // body; the console displays RT from it and never computes its own
  async submitResponse(session: string, response: number): Promise<ResponseAck> {
    const res = await this.send("POST", `/sessions/${session}/response`, { response });
    const raw = await res.text();
    const record = JSON.parse(raw) as TrialRecord;
    const m = raw.match(/"rt_s":\s*([0-9eE+.-]+)/);
    if (!m) throw new ServiceError(500, "response record lacks rt_s");
    return { record, rtText: m[1] };
  }

  async advance(session: string, duration_s: number): Promise<{ t: number; state: string }> {
    return (await this.send("POST", `/sessions/${session}/advance`, { duration_s })).json();
  }

  async results(session: string): Promise<Results> {
    return (await this.get(`/sessions/${session}/results`)).json();
  }

  async closeSession(session: string): Promise<void> {
    await this.send("DELETE", `/sessions/${session}`);
  }

  live(session: string, onSnapshot: (s: Snapshot) => void, onStatus?: (s: string) => void): LiveStream {
    const url = this.baseUrl.replace(/^http/, "ws") + `/sessions/${session}/live`;
    return new LiveStream(url, this.wsCtor, onSnapshot, onStatus);
  }
}

// live stream with automatic reconnect; status callback gets
// "connected" / "reconnecting" / "closed" for the UI badge
export class LiveStream {
  private ws: WebSocketLike | null = null;
  private stopped = false;
  private retryMs = 200;
  snapshots = 0;

  constructor(
    private url: string,
    private wsCtor: WebSocketCtor,
    private onSnapshot: (s: Snapshot) => void,
    private onStatus?: (s: string) => void,
  ) {
    this.open();
  }

  private open(): void {
    this.ws = new this.wsCtor(this.url);
    this.onStatus?.("connected");
    this.ws.onmessage = (ev) => {
      const doc = JSON.parse(String(ev.data));
      // terminal notices (unknown session, session closed) carry no
      // snapshot fields; anything without pressures ends the stream
      if (!("pressures_kpa" in doc)) {
        this.stop();
        return;
      }
      this.snapshots += 1;
      this.onSnapshot(doc as Snapshot);
    };
    this.ws.onerror = () => {
      // close handler does the reconnect
    };
    this.ws.onclose = () => {
      if (this.stopped) return;
      this.onStatus?.("reconnecting");
      setTimeout(() => {
        if (!this.stopped) this.open();
      }, this.retryMs);
    };
  }

  stop(): void {
    if (this.stopped) return;
    this.stopped = true;
    this.onStatus?.("closed");
    this.ws?.close();
  }
}
