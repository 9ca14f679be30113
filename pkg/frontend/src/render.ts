// HTML renderers, all pure string builders over the view model so they can
// be asserted on without a DOM. main.ts owns the actual element wiring.

import type { Json } from "./events.js";
import type {
  PlanCard,
  RoutineRow,
  TranscriptEntry,
  TriggerRow,
  ViewModel,
} from "./view.js";

export interface Toast {
  id: number;
  kind: "error" | "info";
  text: string;
}

export interface UiState {
  connection: "connecting" | "live" | "reconnecting";
  resolving: string | null;
  critiqueOpen: boolean;
  toasts: Toast[];
}

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

interface Rgb {
  r: number;
  g: number;
  b: number;
}

function asColor(value: Json): Rgb | null {
  if (typeof value !== "object" || value === null || Array.isArray(value)) return null;
  const { r, g, b } = value as Record<string, Json>;
  if (typeof r !== "number" || typeof g !== "number" || typeof b !== "number") return null;
  if (Object.keys(value).length !== 3) return null;
  return { r, g, b };
}

/**
 * One setting value as display HTML. Colors become a swatch next to their
 * rgb triple; booleans read as on/off; times arrive pre-formatted as HH:MM
 * and pass through untouched.
 */
export function fmtValue(value: Json): string {
  const color = asColor(value);
  if (color !== null) {
    const css = `rgb(${color.r}, ${color.g}, ${color.b})`;
    return `<span class="swatch" style="background: ${css}"></span><code>${css}</code>`;
  }
  if (typeof value === "boolean") return `<code>${value ? "on" : "off"}</code>`;
  if (value === null) return "<code>none</code>";
  if (typeof value === "number") return `<code>${String(value)}</code>`;
  if (typeof value === "string") return `<code>${escapeHtml(value)}</code>`;
  return `<code>${escapeHtml(JSON.stringify(value))}</code>`;
}

const STEP_SLOTS = ["goal", "clarify", "filter", "plan", "feedback"] as const;
type StepSlot = (typeof STEP_SLOTS)[number];

function slotFor(step: string): StepSlot {
  if (step === "classify_goal") return "goal";
  if (step === "clarify") return "clarify";
  if (step.startsWith("filter_")) return "filter";
  if (step === "feedback_revise") return "feedback";
  return "plan";
}

const RANK = { idle: 0, done: 1, running: 2, error: 3 } as const;
type SlotStatus = keyof typeof RANK;

export function renderChain(view: ViewModel): string {
  const status: Record<StepSlot, SlotStatus> = {
    goal: "idle",
    clarify: "idle",
    filter: "idle",
    plan: "idle",
    feedback: "idle",
  };
  for (const light of view.chain.steps) {
    const slot = slotFor(light.step);
    if (RANK[light.status] > RANK[status[slot]]) status[slot] = light.status;
  }
  const pills = STEP_SLOTS.map(
    (slot) => `<span class="step ${status[slot]}" data-step="${slot}">${slot}</span>`,
  );
  const active = view.chain.active ? " active" : "";
  return `<div class="chain-steps${active}">${pills.join('<span class="sep"></span>')}</div>`;
}

function transcriptEntry(entry: TranscriptEntry, isLast: boolean): string {
  if (entry.kind === "user") {
    return `<li class="turn user"><span class="who">you</span><p>${escapeHtml(entry.text)}</p></li>`;
  }
  if (entry.kind === "clarification") {
    // the assistant is asking for help; give the reply box right here
    const replyBox = isLast
      ? '<form class="clarify-reply" data-role="clarify">' +
        '<input name="text" placeholder="say more" autocomplete="off">' +
        "<button type=\"submit\">reply</button></form>"
      : "";
    const outcome = entry.outcome !== undefined ? ` data-outcome="${escapeHtml(entry.outcome)}"` : "";
    return (
      `<li class="turn clarification"${outcome}><span class="who">hearth</span>` +
      `<p>${escapeHtml(entry.text)}</p>${replyBox}</li>`
    );
  }
  const resolution =
    entry.resolution !== undefined
      ? `<span class="resolution ${escapeHtml(entry.resolution)}">${escapeHtml(entry.resolution)}</span>`
      : "";
  const plan = entry.planId !== undefined ? ` data-plan="${escapeHtml(entry.planId)}"` : "";
  const text = entry.text !== "" ? escapeHtml(entry.text) : "proposed a plan";
  return `<li class="turn system"${plan}><span class="who">hearth</span><p>${text}</p>${resolution}</li>`;
}

export function renderTranscript(view: ViewModel): string {
  const items = view.transcript.map((entry, i) =>
    transcriptEntry(entry, i === view.transcript.length - 1),
  );
  return items.join("");
}

function triggerList(rows: TriggerRow[]): string {
  const items = rows.map((row) => {
    const badge = row.fuzzy ? ' <span class="badge fuzzy">fuzzy match</span>' : "";
    return (
      `<li><span class="path">${escapeHtml(row.scope)} · ${escapeHtml(row.sensor)}</span> ` +
      `${fmtValue(row.value)}${badge}</li>`
    );
  });
  return `<ul class="trigger">${items.join("")}</ul>`;
}

function diffTable(card: PlanCard): string {
  const rows = card.diff.map(
    (row) =>
      `<tr><td>${escapeHtml(row.room)}</td><td>${escapeHtml(row.device)}</td>` +
      `<td>${escapeHtml(row.setting)}</td><td>${fmtValue(row.value)}</td></tr>`,
  );
  return `<table class="diff"><tbody>${rows.join("")}</tbody></table>`;
}

export function renderPlanCard(view: ViewModel, ui: UiState): string {
  const card = view.pending;
  if (card === null) return '<p class="empty">no pending plan</p>';
  const busy = ui.resolving === card.planId;
  const disabled = busy ? " disabled" : "";
  const badges: string[] = [`<span class="badge goal">${escapeHtml(card.goal)}</span>`];
  if (card.cacheHit) badges.push('<span class="badge cache">from cache</span>');
  if (card.revisedFrom !== null) {
    badges.push(`<span class="badge revised">revision of ${escapeHtml(card.revisedFrom)}</span>`);
  }
  if (card.validity !== null && card.validity !== "valid") {
    badges.push(`<span class="badge invalid">${escapeHtml(card.validity)}</span>`);
  }
  const trigger =
    card.trigger !== null ? `<h4>when</h4>${triggerList(card.trigger)}` : "";
  const critique = ui.critiqueOpen
    ? `<form class="critique" data-role="critique" data-plan="${escapeHtml(card.planId)}">` +
      '<input name="critique" placeholder="what should change?" autocomplete="off">' +
      `<button type="submit"${disabled}>send critique</button></form>`
    : "";
  return (
    `<article class="plan-card${busy ? " resolving" : ""}" data-plan="${escapeHtml(card.planId)}">` +
    `<header><span class="plan-id">${escapeHtml(card.planId)}</span>${badges.join("")}</header>` +
    `<p class="explanation">${escapeHtml(card.explanation)}</p>` +
    trigger +
    `<h4>changes</h4>${diffTable(card)}` +
    `<footer class="controls">` +
    `<button data-action="accept" data-plan="${escapeHtml(card.planId)}"${disabled}>accept</button>` +
    `<button data-action="revise-open" data-plan="${escapeHtml(card.planId)}"${disabled}>revise</button>` +
    `</footer>${critique}</article>`
  );
}

export function renderStatePanel(view: ViewModel): string {
  const marked = new Set(view.highlights);
  const rooms = Object.keys(view.state).sort();
  const sections = rooms.map((room) => {
    const devices = view.state[room] ?? {};
    const rows: string[] = [];
    for (const device of Object.keys(devices).sort()) {
      const settings = devices[device] ?? {};
      for (const setting of Object.keys(settings).sort()) {
        const path = `${room}/${device}/${setting}`;
        const cls = marked.has(path) ? ' class="changed"' : "";
        rows.push(
          `<tr${cls} data-path="${escapeHtml(path)}"><td>${escapeHtml(device)}</td>` +
            `<td>${escapeHtml(setting)}</td><td>${fmtValue(settings[setting] ?? null)}</td></tr>`,
        );
      }
    }
    return (
      `<section class="room"><h3>${escapeHtml(room)}</h3>` +
      `<table><tbody>${rows.join("")}</tbody></table></section>`
    );
  });
  let footer = "";
  if (view.lastChange !== null) {
    const by =
      view.lastChange.routineId !== null
        ? `routine ${escapeHtml(view.lastChange.routineId)}`
        : escapeHtml(view.lastChange.source);
    footer = `<p class="state-source">last change: ${by}</p>`;
  }
  return sections.join("") + footer;
}

function routineArticle(row: RoutineRow): string {
  const deeds = row.action.map(
    (a) =>
      `<li><span class="path">${escapeHtml(a.room)} · ${escapeHtml(a.device)} · ` +
      `${escapeHtml(a.setting)}</span> ${fmtValue(a.value)}</li>`,
  );
  const fired =
    row.fired.length === 0
      ? "never fired"
      : `fired ${row.fired.length} time${row.fired.length === 1 ? "" : "s"}`;
  // enable/disable is not exposed over HTTP; the checkbox mirrors state only
  return (
    `<article class="routine" data-routine="${escapeHtml(row.routineId)}">` +
    `<header><span class="routine-id">${escapeHtml(row.routineId)}</span>` +
    `<label class="toggle"><input type="checkbox"${row.enabled ? " checked" : ""} disabled ` +
    `title="managed through the assistant"> enabled</label></header>` +
    (row.explanation !== "" ? `<p class="explanation">${escapeHtml(row.explanation)}</p>` : "") +
    `<h4>when</h4>${triggerList(row.trigger)}` +
    `<h4>do</h4><ul class="deeds">${deeds.join("")}</ul>` +
    `<p class="fired">${fired}</p></article>`
  );
}

export function renderRoutines(view: ViewModel): string {
  if (view.routines.length === 0) return '<p class="empty">no routines yet</p>';
  return view.routines.map(routineArticle).join("");
}

export function renderToasts(ui: UiState): string {
  return ui.toasts
    .map(
      (toast) =>
        `<div class="toast ${toast.kind}">${escapeHtml(toast.text)}` +
        `<button data-action="dismiss-toast" data-toast="${toast.id}">dismiss</button></div>`,
    )
    .join("");
}
