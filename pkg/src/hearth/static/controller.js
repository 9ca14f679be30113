// Glue between user intent and the service. The view itself only ever
// changes through applyEvent; the controller's own state (toasts, the
// optimistic lock on a card being resolved) is transient UI chrome.
import { ApiError } from "./client.js";
import { initialView, reduce } from "./view.js";
export class Controller {
    client;
    sessionId;
    renderFn;
    view;
    ui = {
        connection: "connecting",
        resolving: null,
        critiqueOpen: false,
        toasts: [],
    };
    toastSeq = 0;
    constructor(client, sessionId, seed, renderFn = () => undefined) {
        this.client = client;
        this.sessionId = sessionId;
        this.renderFn = renderFn;
        this.view = initialView(seed);
    }
    paint() {
        this.renderFn(this.view, this.ui);
    }
    applyEvent(row) {
        this.view = reduce(this.view, row);
        if (row.kind === "PlanResolved" && this.ui.resolving === row.payload["plan_id"]) {
            this.ui.resolving = null;
            this.ui.critiqueOpen = false;
        }
        if (row.kind === "PlanProposed")
            this.ui.critiqueOpen = false;
        this.paint();
    }
    connection(status) {
        if (this.ui.connection === status)
            return;
        this.ui.connection = status;
        this.paint();
    }
    async sendCommand(text) {
        const line = text.trim();
        if (line === "")
            return;
        try {
            await this.client.sendMessage(this.sessionId, line);
        }
        catch (err) {
            this.fail(err);
        }
    }
    /** Controls freeze as soon as the verdict leaves; the PlanResolved event
     *  (or an error) is what unfreezes them. */
    async submitVerdict(planId, verdict) {
        this.ui.resolving = planId;
        this.paint();
        try {
            await this.client.resolvePlan(this.sessionId, planId, verdict);
        }
        catch (err) {
            this.ui.resolving = null;
            this.fail(err);
        }
    }
    openCritique() {
        this.ui.critiqueOpen = true;
        this.paint();
    }
    dismissToast(id) {
        this.ui.toasts = this.ui.toasts.filter((toast) => toast.id !== id);
        this.paint();
    }
    fail(err) {
        const text = err instanceof ApiError ? `${err.code}: ${err.message}` : `request failed: ${String(err)}`;
        this.ui.toasts.push({ id: ++this.toastSeq, kind: "error", text });
        this.paint();
    }
}
