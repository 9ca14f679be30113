// HTTP client and the event feed. The console's only writes are message
// posts and plan verdicts; everything else on this API surface is a read.

import type { EventRow, Json } from "./events.js";
import { EVENT_KINDS } from "./events.js";
import type { StateDoc } from "./view.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export type Verdict = { verdict: "accept" } | { verdict: "reject"; critique?: string };

export interface ResolveResult {
  resolved: "accepted" | "rejected" | "revised" | "abandoned";
  installed?: boolean;
  plan_id?: string;
}

export class ServiceClient {
  constructor(
    readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async req(method: string, path: string, body?: unknown): Promise<Json> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchFn(this.base + path, init);
    const doc = (await resp.json()) as Record<string, Json>;
    if (!resp.ok) {
      const code = typeof doc["code"] === "string" ? doc["code"] : "Unknown";
      const message = typeof doc["message"] === "string" ? doc["message"] : resp.statusText;
      throw new ApiError(resp.status, code, message);
    }
    return doc;
  }

  async createSession(body: Record<string, Json> = {}): Promise<{ session_id: string; home_id: string }> {
    return (await this.req("POST", "/sessions", body)) as unknown as {
      session_id: string;
      home_id: string;
    };
  }

  async state(sessionId: string): Promise<{ home_id: string; state: StateDoc }> {
    return (await this.req("GET", `/sessions/${sessionId}/state`)) as unknown as {
      home_id: string;
      state: StateDoc;
    };
  }

  async sendMessage(sessionId: string, text: string): Promise<{ cursor: number }> {
    return (await this.req("POST", `/sessions/${sessionId}/message`, { text })) as unknown as {
      cursor: number;
    };
  }

  async resolvePlan(sessionId: string, planId: string, verdict: Verdict): Promise<ResolveResult> {
    return (await this.req(
      "POST",
      `/sessions/${sessionId}/plans/${planId}/resolve`,
      verdict,
    )) as unknown as ResolveResult;
  }

  async pollEvents(
    sessionId: string,
    cursor: number,
    wait = 0,
  ): Promise<{ events: EventRow[]; cursor: number }> {
    const query = wait > 0 ? `cursor=${cursor}&wait=${wait}` : `cursor=${cursor}`;
    return (await this.req(
      "GET",
      `/sessions/${sessionId}/events.json?${query}`,
    )) as unknown as { events: EventRow[]; cursor: number };
  }
}

export interface FeedHandlers {
  onEvent(row: EventRow): void;
  onConnection(status: "live" | "reconnecting"): void;
}

/**
 * Delivers the session's events in order, exactly once. Prefers SSE when the
 * runtime has EventSource and falls back to long polling otherwise. Both
 * paths replay from the last seen cursor after a drop and shed duplicates,
 * so consumers never see a gap or a repeat.
 */
export class EventFeed {
  private cursor = 0;
  private stopped = false;
  private source: EventSource | null = null;

  constructor(
    private readonly client: ServiceClient,
    private readonly sessionId: string,
    private readonly handlers: FeedHandlers,
  ) {}

  start(fromCursor = 0): void {
    this.cursor = fromCursor;
    if (typeof EventSource !== "undefined") {
      this.listen();
    } else {
      void this.loop();
    }
  }

  stop(): void {
    this.stopped = true;
    if (this.source !== null) this.source.close();
  }

  /** One polling round; the loop and the tests share it. */
  async pump(wait = 0): Promise<number> {
    let doc;
    try {
      doc = await this.client.pollEvents(this.sessionId, this.cursor, wait);
    } catch (err) {
      this.handlers.onConnection("reconnecting");
      throw err;
    }
    let delivered = 0;
    for (const row of doc.events) {
      if (row.cursor <= this.cursor) continue;
      this.cursor = row.cursor;
      this.handlers.onEvent(row);
      delivered += 1;
    }
    this.handlers.onConnection("live");
    return delivered;
  }

  private async loop(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.pump(25);
      } catch {
        await new Promise((resolve) => setTimeout(resolve, 1000));
      }
    }
  }

  private listen(): void {
    // After a drop EventSource retries with the Last-Event-ID header; the
    // server replays from there, and the cursor check drops anything the
    // first connection already delivered.
    const path = `${this.client.base}/sessions/${this.sessionId}/events`;
    const url = this.cursor > 0 ? `${path}?cursor=${this.cursor}` : path;
    const source = new EventSource(url);
    for (const kind of EVENT_KINDS) {
      source.addEventListener(kind, (ev: MessageEvent<string>) => {
        const cursor = Number(ev.lastEventId);
        if (!Number.isFinite(cursor) || cursor <= this.cursor) return;
        this.cursor = cursor;
        this.handlers.onEvent({
          cursor,
          kind,
          payload: JSON.parse(ev.data) as Record<string, Json>,
        });
      });
    }
    source.onopen = () => this.handlers.onConnection("live");
    source.onerror = () => this.handlers.onConnection("reconnecting");
    this.source = source;
  }
}
