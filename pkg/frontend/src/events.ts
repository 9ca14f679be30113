// The service's per-session event log, one row per event. The SSE stream
// carries the kind in `event:` and the cursor in `id:`; the polling feed
// returns whole rows. Both transports normalize to EventRow.

export type Json =
  | null
  | boolean
  | number
  | string
  | Json[]
  | { [key: string]: Json };

export interface EventRow {
  cursor: number;
  kind: string;
  payload: Record<string, Json>;
}

/** room -> device -> setting -> value */
export type AssignmentsDoc = Record<string, Record<string, Record<string, Json>>>;

/** scope -> sensor -> value the trigger waits for */
export type TriggerDoc = Record<string, Record<string, Json>>;

export interface UserMessagePayload {
  text: string;
}

export interface ChainStepPayload {
  step: string;
  status: "running" | "done" | "error";
}

export interface PlanProposedPayload {
  plan_id: string;
  command: string;
  goal: string;
  plan: Record<string, Json>;
  explanation: string;
  validity: string | null;
  cache_hit?: boolean;
  revised_from?: string;
  freeform_trigger?: [string, string][];
}

export interface PlanResolvedPayload {
  plan_id: string;
  resolution: "accepted" | "rejected";
}

export interface NeedsClarificationPayload {
  utterance: string;
  outcome: string;
}

export interface SettingChange {
  room: string;
  device: string;
  setting: string;
  before: Json;
  after: Json;
}

export interface StateChangedPayload {
  changes: SettingChange[];
  source: "plan" | "routine";
  routine_id?: string;
}

export interface RoutineInstalledPayload {
  routine_id: string;
  plan: Record<string, Json>;
  freeform_trigger?: [string, string][];
}

export interface RoutineFiredPayload {
  routine_id: string;
}

export const EVENT_KINDS = [
  "UserMessage",
  "ChainStep",
  "PlanProposed",
  "PlanResolved",
  "NeedsClarification",
  "StateChanged",
  "RoutineInstalled",
  "RoutineFired",
] as const;

export interface SplitPlan {
  assignments: AssignmentsDoc;
  trigger: TriggerDoc | null;
  explanation: string;
}

/**
 * Take a plan document apart. Immediate plans are room keys plus an inline
 * "explanation"; routine plans carry trigger/action/explanation instead.
 */
export function splitPlanDoc(doc: Record<string, Json>): SplitPlan {
  const explanation = typeof doc["explanation"] === "string" ? doc["explanation"] : "";
  if ("trigger" in doc && "action" in doc) {
    return {
      assignments: (doc["action"] ?? {}) as AssignmentsDoc,
      trigger: (doc["trigger"] ?? {}) as TriggerDoc,
      explanation,
    };
  }
  const assignments: AssignmentsDoc = {};
  for (const [room, devices] of Object.entries(doc)) {
    if (room === "explanation") continue;
    assignments[room] = devices as Record<string, Record<string, Json>>;
  }
  return { assignments, trigger: null, explanation };
}
