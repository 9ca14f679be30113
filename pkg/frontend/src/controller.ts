// Glue between user intent and the service. The view itself only ever
// changes through applyEvent; the controller's own state (toasts, the
// optimistic lock on a card being resolved) is transient UI chrome.

import { ApiError, ServiceClient, type Verdict } from "./client.js";
import type { EventRow } from "./events.js";
import type { UiState } from "./render.js";
import { initialView, reduce, type StateDoc, type ViewModel } from "./view.js";

export type RenderFn = (view: ViewModel, ui: UiState) => void;

export class Controller {
  view: ViewModel;
  readonly ui: UiState = {
    connection: "connecting",
    resolving: null,
    critiqueOpen: false,
    toasts: [],
  };
  private toastSeq = 0;

  constructor(
    private readonly client: ServiceClient,
    private readonly sessionId: string,
    seed: StateDoc,
    private readonly renderFn: RenderFn = () => undefined,
  ) {
    this.view = initialView(seed);
  }

  paint(): void {
    this.renderFn(this.view, this.ui);
  }

  applyEvent(row: EventRow): void {
    this.view = reduce(this.view, row);
    if (row.kind === "PlanResolved" && this.ui.resolving === row.payload["plan_id"]) {
      this.ui.resolving = null;
      this.ui.critiqueOpen = false;
    }
    if (row.kind === "PlanProposed") this.ui.critiqueOpen = false;
    this.paint();
  }

  connection(status: UiState["connection"]): void {
    if (this.ui.connection === status) return;
    this.ui.connection = status;
    this.paint();
  }

  async sendCommand(text: string): Promise<void> {
    const line = text.trim();
    if (line === "") return;
    try {
      await this.client.sendMessage(this.sessionId, line);
    } catch (err) {
      this.fail(err);
    }
  }

  /** Controls freeze as soon as the verdict leaves; the PlanResolved event
   *  (or an error) is what unfreezes them. */
  async submitVerdict(planId: string, verdict: Verdict): Promise<void> {
    this.ui.resolving = planId;
    this.paint();
    try {
      await this.client.resolvePlan(this.sessionId, planId, verdict);
    } catch (err) {
      this.ui.resolving = null;
      this.fail(err);
    }
  }

  openCritique(): void {
    this.ui.critiqueOpen = true;
    this.paint();
  }

  dismissToast(id: number): void {
    this.ui.toasts = this.ui.toasts.filter((toast) => toast.id !== id);
    this.paint();
  }

  private fail(err: unknown): void {
    const text =
      err instanceof ApiError ? `${err.code}: ${err.message}` : `request failed: ${String(err)}`;
    this.ui.toasts.push({ id: ++this.toastSeq, kind: "error", text });
    this.paint();
  }
}
