// HTTP client and the event feed. The console's only writes are message
// posts and plan verdicts; everything else on this API surface is a read.
import { EVENT_KINDS } from "./events.js";
export class ApiError extends Error {
    status;
    code;
    constructor(status, code, message) {
        super(message);
        this.status = status;
        this.code = code;
    }
}
export class ServiceClient {
    base;
    fetchFn;
    constructor(base, fetchFn = (input, init) => fetch(input, init)) {
        this.base = base;
        this.fetchFn = fetchFn;
    }
    async req(method, path, body) {
        const init = { method, headers: { "content-type": "application/json" } };
        if (body !== undefined)
            init.body = JSON.stringify(body);
        const resp = await this.fetchFn(this.base + path, init);
        const doc = (await resp.json());
        if (!resp.ok) {
            const code = typeof doc["code"] === "string" ? doc["code"] : "Unknown";
            const message = typeof doc["message"] === "string" ? doc["message"] : resp.statusText;
            throw new ApiError(resp.status, code, message);
        }
        return doc;
    }
    async createSession(body = {}) {
        return (await this.req("POST", "/sessions", body));
    }
    async state(sessionId) {
        return (await this.req("GET", `/sessions/${sessionId}/state`));
    }
    async sendMessage(sessionId, text) {
        return (await this.req("POST", `/sessions/${sessionId}/message`, { text }));
    }
    async resolvePlan(sessionId, planId, verdict) {
        return (await this.req("POST", `/sessions/${sessionId}/plans/${planId}/resolve`, verdict));
    }
    async pollEvents(sessionId, cursor, wait = 0) {
        const query = wait > 0 ? `cursor=${cursor}&wait=${wait}` : `cursor=${cursor}`;
        return (await this.req("GET", `/sessions/${sessionId}/events.json?${query}`));
    }
}
/**
 * Delivers the session's events in order, exactly once. Prefers SSE when the
 * runtime has EventSource and falls back to long polling otherwise. Both
 * paths replay from the last seen cursor after a drop and shed duplicates,
 * so consumers never see a gap or a repeat.
 */
export class EventFeed {
    client;
    sessionId;
    handlers;
    cursor = 0;
    stopped = false;
    source = null;
    constructor(client, sessionId, handlers) {
        this.client = client;
        this.sessionId = sessionId;
        this.handlers = handlers;
    }
    start(fromCursor = 0) {
        this.cursor = fromCursor;
        if (typeof EventSource !== "undefined") {
            this.listen();
        }
        else {
            void this.loop();
        }
    }
    stop() {
        this.stopped = true;
        if (this.source !== null)
            this.source.close();
    }
    /** One polling round; the loop and the tests share it. */
    async pump(wait = 0) {
        let doc;
        try {
            doc = await this.client.pollEvents(this.sessionId, this.cursor, wait);
        }
        catch (err) {
            this.handlers.onConnection("reconnecting");
            throw err;
        }
        let delivered = 0;
        for (const row of doc.events) {
            if (row.cursor <= this.cursor)
                continue;
            this.cursor = row.cursor;
            this.handlers.onEvent(row);
            delivered += 1;
        }
        this.handlers.onConnection("live");
        return delivered;
    }
    async loop() {
        while (!this.stopped) {
            try {
                await this.pump(25);
            }
            catch {
                await new Promise((resolve) => setTimeout(resolve, 1000));
            }
        }
    }
    listen() {
        // After a drop EventSource retries with the Last-Event-ID header; the
        // server replays from there, and the cursor check drops anything the
        // first connection already delivered.
        const path = `${this.client.base}/sessions/${this.sessionId}/events`;
        const url = this.cursor > 0 ? `${path}?cursor=${this.cursor}` : path;
        const source = new EventSource(url);
        for (const kind of EVENT_KINDS) {
            source.addEventListener(kind, (ev) => {
                const cursor = Number(ev.lastEventId);
                if (!Number.isFinite(cursor) || cursor <= this.cursor)
                    return;
                this.cursor = cursor;
                this.handlers.onEvent({
                    cursor,
                    kind,
                    payload: JSON.parse(ev.data),
                });
            });
        }
        source.onopen = () => this.handlers.onConnection("live");
        source.onerror = () => this.handlers.onConnection("reconnecting");
        this.source = source;
    }
}
