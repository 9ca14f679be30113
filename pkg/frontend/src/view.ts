// View model and its reducer. The whole console view is a fold over the
// session's event log: reduce(initialView(seed), events) and nothing else.
// Replaying the same log always rebuilds the same view, which is what lets
// a reconnecting client resume from its cursor without drift.

import type {
  AssignmentsDoc,
  ChainStepPayload,
  EventRow,
  Json,
  NeedsClarificationPayload,
  PlanProposedPayload,
  PlanResolvedPayload,
  RoutineFiredPayload,
  RoutineInstalledPayload,
  StateChangedPayload,
  TriggerDoc,
  UserMessagePayload,
} from "./events.js";
import { splitPlanDoc } from "./events.js";

export interface DiffRow {
  room: string;
  device: string;
  setting: string;
  value: Json;
}

export interface TriggerRow {
  scope: string;
  sensor: string;
  value: Json;
  fuzzy: boolean;
}

export type CardStatus = "pending" | "accepted" | "rejected";

export interface PlanCard {
  planId: string;
  command: string;
  goal: string;
  explanation: string;
  validity: string | null;
  cacheHit: boolean;
  revisedFrom: string | null;
  diff: DiffRow[];
  trigger: TriggerRow[] | null;
  status: CardStatus;
}

export interface TranscriptEntry {
  cursor: number;
  kind: "user" | "system" | "clarification";
  text: string;
  planId?: string;
  resolution?: string;
  outcome?: string;
}

export interface StepLight {
  step: string;
  status: "running" | "done" | "error";
}

export interface RoutineRow {
  routineId: string;
  trigger: TriggerRow[];
  action: DiffRow[];
  explanation: string;
  enabled: boolean;
  fired: number[];
}

export type StateDoc = Record<string, Record<string, Record<string, Json>>>;

export interface LastChange {
  source: string;
  routineId: string | null;
}

export interface ViewModel {
  transcript: TranscriptEntry[];
  pending: PlanCard | null;
  history: PlanCard[];
  state: StateDoc;
  highlights: string[];
  lastChange: LastChange | null;
  routines: RoutineRow[];
  chain: { steps: StepLight[]; active: boolean };
  cursor: number;
}

export function initialView(state: StateDoc): ViewModel {
  return {
    transcript: [],
    pending: null,
    history: [],
    state: structuredClone(state),
    highlights: [],
    lastChange: null,
    routines: [],
    chain: { steps: [], active: false },
    cursor: 0,
  };
}

function diffRows(assignments: AssignmentsDoc): DiffRow[] {
  const rows: DiffRow[] = [];
  for (const room of Object.keys(assignments).sort()) {
    const devices = assignments[room] ?? {};
    for (const device of Object.keys(devices).sort()) {
      const settings = devices[device] ?? {};
      for (const setting of Object.keys(settings).sort()) {
        rows.push({
          room,
          device,
          setting,
          value: structuredClone(settings[setting] ?? null),
        });
      }
    }
  }
  return rows;
}

function triggerRows(trigger: TriggerDoc, freeform?: [string, string][]): TriggerRow[] {
  const fuzzy = new Set((freeform ?? []).map(([scope, name]) => `${scope}/${name}`));
  const rows: TriggerRow[] = [];
  for (const scope of Object.keys(trigger).sort()) {
    const sensors = trigger[scope] ?? {};
    for (const sensor of Object.keys(sensors).sort()) {
      rows.push({
        scope,
        sensor,
        value: structuredClone(sensors[sensor] ?? null),
        fuzzy: fuzzy.has(`${scope}/${sensor}`),
      });
    }
  }
  return rows;
}

function planCard(payload: PlanProposedPayload): PlanCard {
  const { assignments, trigger, explanation } = splitPlanDoc(payload.plan);
  return {
    planId: payload.plan_id,
    command: payload.command,
    goal: payload.goal,
    explanation: payload.explanation !== "" ? payload.explanation : explanation,
    validity: payload.validity ?? null,
    cacheHit: payload.cache_hit === true,
    revisedFrom: payload.revised_from ?? null,
    diff: diffRows(assignments),
    trigger: trigger === null ? null : triggerRows(trigger, payload.freeform_trigger),
    status: "pending",
  };
}

/**
 * Fold one event into the view. Rows at or below the view's cursor are
 * replays and return the view untouched, so duplicated delivery after a
 * reconnect is harmless by construction.
 */
export function reduce(view: ViewModel, row: EventRow): ViewModel {
  if (row.cursor <= view.cursor) return view;
  const next = structuredClone(view);
  next.cursor = row.cursor;

  switch (row.kind) {
    case "UserMessage": {
      const p = row.payload as unknown as UserMessagePayload;
      next.transcript.push({ cursor: row.cursor, kind: "user", text: p.text });
      next.chain = { steps: [], active: true };
      break;
    }
    case "ChainStep": {
      const p = row.payload as unknown as ChainStepPayload;
      const steps = next.chain.steps;
      const last = steps[steps.length - 1];
      if (last !== undefined && last.step === p.step && last.status === "running") {
        last.status = p.status;
      } else {
        steps.push({ step: p.step, status: p.status });
      }
      break;
    }
    case "PlanProposed": {
      const p = row.payload as unknown as PlanProposedPayload;
      if (next.pending !== null) {
        // the log resolves cards before superseding them; tolerate gaps
        next.pending.status = "rejected";
        next.history.push(next.pending);
      }
      const card = planCard(p);
      next.pending = card;
      next.transcript.push({
        cursor: row.cursor,
        kind: "system",
        text: card.explanation,
        planId: card.planId,
      });
      next.chain.active = false;
      break;
    }
    case "PlanResolved": {
      const p = row.payload as unknown as PlanResolvedPayload;
      if (next.pending !== null && next.pending.planId === p.plan_id) {
        next.pending.status = p.resolution;
        next.history.push(next.pending);
        next.pending = null;
      }
      for (const entry of next.transcript) {
        if (entry.planId === p.plan_id) entry.resolution = p.resolution;
      }
      break;
    }
    case "NeedsClarification": {
      const p = row.payload as unknown as NeedsClarificationPayload;
      next.transcript.push({
        cursor: row.cursor,
        kind: "clarification",
        text: p.utterance,
        outcome: p.outcome,
      });
      next.chain.active = false;
      break;
    }
    case "StateChanged": {
      const p = row.payload as unknown as StateChangedPayload;
      const marks: string[] = [];
      for (const change of p.changes) {
        const devices = (next.state[change.room] ??= {});
        const settings = (devices[change.device] ??= {});
        settings[change.setting] = structuredClone(change.after);
        marks.push(`${change.room}/${change.device}/${change.setting}`);
      }
      next.highlights = marks;
      next.lastChange = { source: p.source, routineId: p.routine_id ?? null };
      break;
    }
    case "RoutineInstalled": {
      const p = row.payload as unknown as RoutineInstalledPayload;
      const { assignments, trigger, explanation } = splitPlanDoc(p.plan);
      next.routines.push({
        routineId: p.routine_id,
        trigger: trigger === null ? [] : triggerRows(trigger, p.freeform_trigger),
        action: diffRows(assignments),
        explanation,
        enabled: true,
        fired: [],
      });
      break;
    }
    case "RoutineFired": {
      const p = row.payload as unknown as RoutineFiredPayload;
      const routine = next.routines.find((r) => r.routineId === p.routine_id);
      if (routine !== undefined) routine.fired.push(row.cursor);
      break;
    }
    default:
      // unknown kinds must not break older consoles
      break;
  }
  return next;
}

export function replay(seed: StateDoc, rows: EventRow[]): ViewModel {
  let view = initialView(seed);
  for (const row of rows) view = reduce(view, row);
  return view;
}
