// The renderers are plain string builders, so these assertions run without
// a DOM. They pin the display rules: color swatches, on/off booleans,
// HH:MM passthrough, the fuzzy-match badge, and control disabling.

import { describe, expect, it } from "vitest";
import {
  escapeHtml,
  fmtValue,
  renderChain,
  renderPlanCard,
  renderRoutines,
  renderStatePanel,
  renderToasts,
  renderTranscript,
  type UiState,
} from "../src/render.js";
import { initialView, type PlanCard, type ViewModel } from "../src/view.js";

function ui(overrides: Partial<UiState> = {}): UiState {
  return { connection: "live", resolving: null, critiqueOpen: false, toasts: [], ...overrides };
}

function card(overrides: Partial<PlanCard> = {}): PlanCard {
  return {
    planId: "p1",
    command: "warm up the den",
    goal: "immediate",
    explanation: "Warm light in the den.",
    validity: "valid",
    cacheHit: false,
    revisedFrom: null,
    diff: [{ room: "den", device: "lamp", setting: "state", value: true }],
    trigger: null,
    status: "pending",
    ...overrides,
  };
}

function view(overrides: Partial<ViewModel> = {}): ViewModel {
  return { ...initialView({}), ...overrides };
}

describe("value formatting", () => {
  it("renders color values as a swatch plus the rgb triple", () => {
    const html = fmtValue({ r: 255, g: 147, b: 41 });
    expect(html).toContain('class="swatch"');
    expect(html).toContain("background: rgb(255, 147, 41)");
    expect(html).toContain("rgb(255, 147, 41)</code>");
  });

  it("renders booleans as on/off", () => {
    expect(fmtValue(true)).toContain("on");
    expect(fmtValue(false)).toContain("off");
  });

  it("passes HH:MM strings through unchanged", () => {
    expect(fmtValue("07:00")).toContain("07:00");
  });

  it("escapes markup hiding in strings", () => {
    expect(fmtValue('<img src=x onerror="1">')).not.toContain("<img");
    expect(escapeHtml("a & b < c")).toBe("a &amp; b &lt; c");
  });
});

describe("plan card", () => {
  it("is replaced by an empty notice without a pending plan", () => {
    expect(renderPlanCard(view(), ui())).toContain("no pending plan");
  });

  it("shows explanation, diff rows, and live controls when pending", () => {
    const html = renderPlanCard(view({ pending: card() }), ui());
    expect(html).toContain("Warm light in the den.");
    expect(html).toContain("<td>den</td>");
    expect(html).toContain('data-action="accept"');
    expect(html).toContain('data-action="revise-open"');
    expect(html).not.toContain("disabled");
  });

  it("freezes controls while its verdict is in flight", () => {
    const html = renderPlanCard(view({ pending: card() }), ui({ resolving: "p1" }));
    expect(html).toContain("disabled");
    expect(html).toContain("resolving");
  });

  it("marks routine plans with their trigger and the fuzzy badge", () => {
    const pending = card({
      goal: "persistent",
      trigger: [
        { scope: "global", sensor: "local_time", value: "17:00", fuzzy: false },
        { scope: "global", sensor: "weather", value: "raining", fuzzy: true },
      ],
    });
    const html = renderPlanCard(view({ pending }), ui());
    expect(html).toContain("17:00");
    expect(html.match(/fuzzy match/g)).toHaveLength(1);
  });

  it("badges cache replays and revision lineage", () => {
    const html = renderPlanCard(
      view({ pending: card({ cacheHit: true, revisedFrom: "p1", planId: "p2" }) }),
      ui(),
    );
    expect(html).toContain("from cache");
    expect(html).toContain("revision of p1");
  });

  it("opens the critique box on demand", () => {
    const html = renderPlanCard(view({ pending: card() }), ui({ critiqueOpen: true }));
    expect(html).toContain('data-role="critique"');
    expect(html).toContain("what should change?");
  });
});

describe("state panel", () => {
  const home = { den: { lamp: { state: true, color: { r: 0, g: 255, b: 255 } } } };

  it("lists rooms, devices, and formatted values", () => {
    const html = renderStatePanel(view({ state: home }));
    expect(html).toContain("<h3>den</h3>");
    expect(html).toContain("rgb(0, 255, 255)");
  });

  it("highlights exactly the paths of the latest change", () => {
    const html = renderStatePanel(
      view({
        state: home,
        highlights: ["den/lamp/state"],
        lastChange: { source: "routine", routineId: "r1" },
      }),
    );
    expect(html).toContain('class="changed" data-path="den/lamp/state"');
    expect(html).not.toContain('class="changed" data-path="den/lamp/color"');
    expect(html).toContain("last change: routine r1");
  });
});

describe("routine list", () => {
  it("renders triggers with fuzzy badges and a read-only toggle", () => {
    const html = renderRoutines(
      view({
        routines: [
          {
            routineId: "r1",
            trigger: [{ scope: "global", sensor: "weather", value: "raining", fuzzy: true }],
            action: [{ room: "den", device: "lamp", setting: "state", value: true }],
            explanation: "Rainy day light.",
            enabled: true,
            fired: [15, 40],
          },
        ],
      }),
    );
    expect(html).toContain("fuzzy match");
    expect(html).toContain("checked disabled");
    expect(html).toContain("fired 2 times");
  });

  it("says so when there are none", () => {
    expect(renderRoutines(view())).toContain("no routines yet");
  });
});

describe("transcript and chain", () => {
  it("marks user, system, and clarification turns", () => {
    const html = renderTranscript(
      view({
        transcript: [
          { cursor: 1, kind: "user", text: "hi" },
          { cursor: 2, kind: "system", text: "a plan", planId: "p1", resolution: "accepted" },
          { cursor: 3, kind: "clarification", text: "which room?", outcome: "no_relevant_devices" },
        ],
      }),
    );
    expect(html).toContain('class="turn user"');
    expect(html).toContain('class="turn system"');
    expect(html).toContain("accepted");
    // the trailing clarification carries its inline reply box
    expect(html).toContain('data-role="clarify"');
  });

  it("only the last clarification gets the inline reply box", () => {
    const html = renderTranscript(
      view({
        transcript: [
          { cursor: 1, kind: "clarification", text: "which room?" },
          { cursor: 2, kind: "user", text: "the den" },
        ],
      }),
    );
    expect(html).not.toContain('data-role="clarify"');
  });

  it("lights chain steps by their strongest reported status", () => {
    const html = renderChain(
      view({
        chain: {
          active: true,
          steps: [
            { step: "classify_goal", status: "done" },
            { step: "clarify", status: "done" },
            { step: "filter_devices", status: "running" },
          ],
        },
      }),
    );
    expect(html).toContain('class="step done" data-step="goal"');
    expect(html).toContain('class="step running" data-step="filter"');
    expect(html).toContain('class="step idle" data-step="feedback"');
  });
});

describe("toasts", () => {
  it("renders dismissible error toasts", () => {
    const html = renderToasts(
      ui({ toasts: [{ id: 1, kind: "error", text: "NoPendingPlan: no pending plan 'p9'" }] }),
    );
    expect(html).toContain("NoPendingPlan");
    expect(html).toContain('data-action="dismiss-toast"');
  });
});
