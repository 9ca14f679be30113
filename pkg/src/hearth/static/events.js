// The service's per-session event log, one row per event. The SSE stream
// carries the kind in `event:` and the cursor in `id:`; the polling feed
// returns whole rows. Both transports normalize to EventRow.
export const EVENT_KINDS = [
    "UserMessage",
    "ChainStep",
    "PlanProposed",
    "PlanResolved",
    "NeedsClarification",
    "StateChanged",
    "RoutineInstalled",
    "RoutineFired",
];
/**
 * Take a plan document apart. Immediate plans are room keys plus an inline
 * "explanation"; routine plans carry trigger/action/explanation instead.
 */
export function splitPlanDoc(doc) {
    const explanation = typeof doc["explanation"] === "string" ? doc["explanation"] : "";
    if ("trigger" in doc && "action" in doc) {
        return {
            assignments: (doc["action"] ?? {}),
            trigger: (doc["trigger"] ?? {}),
            explanation,
        };
    }
    const assignments = {};
    for (const [room, devices] of Object.entries(doc)) {
        if (room === "explanation")
            continue;
        assignments[room] = devices;
    }
    return { assignments, trigger: null, explanation };
}
