// Accept/revise round trips against a scripted server. The stub speaks the
// same HTTP surface as the real service and appends the same event rows, so
// the controller, feed, and reducer run exactly the code the browser runs,
// fetch included.

import { beforeEach, describe, expect, it } from "vitest";
import { EventFeed, ServiceClient } from "../src/client.js";
import { Controller } from "../src/controller.js";
import type { EventRow, Json } from "../src/events.js";
import type { StateDoc } from "../src/view.js";

const SEED: StateDoc = {
  den: {
    lamp: { state: false, brightness: 0.1, color: { r: 0, g: 0, b: 0 } },
    amp: { state: false },
  },
};

const CHAIN = ["classify_goal", "clarify", "filter_devices", "plan_immediate"];

class ScriptedServer {
  rows: EventRow[] = [];
  pending: string | null = null;
  expired = false;
  failEventsOnce = false;
  readonly requests: { method: string; url: string }[] = [];
  private planSeq = 0;

  push(kind: string, payload: Record<string, Json>): void {
    this.rows.push({ cursor: this.rows.length + 1, kind, payload });
  }

  private propose(command: string, revisedFrom?: string): string {
    const planId = `p${++this.planSeq}`;
    const ampOn = revisedFrom === undefined;
    const payload: Record<string, Json> = {
      plan_id: planId,
      command,
      goal: "immediate",
      plan: {
        den: {
          lamp: { state: true, brightness: 0.8 },
          ...(ampOn ? { amp: { state: true } } : {}),
        },
        explanation: ampOn ? "Lamp and amp on." : "Just the lamp.",
      },
      explanation: ampOn ? "Lamp and amp on." : "Just the lamp.",
      validity: "valid",
    };
    if (revisedFrom === undefined) {
      payload["cache_hit"] = false;
    } else {
      payload["revised_from"] = revisedFrom;
    }
    this.push("PlanProposed", payload);
    this.pending = planId;
    return planId;
  }

  private json(status: number, doc: unknown): Response {
    return new Response(JSON.stringify(doc), {
      status,
      headers: { "content-type": "application/json" },
    });
  }

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    this.requests.push({ method, url });
    const [path, query = ""] = url.split("?");
    const body =
      typeof init?.body === "string" ? (JSON.parse(init.body) as Record<string, Json>) : {};

    if (this.expired) {
      return this.json(404, { code: "SessionExpired", message: "unknown or expired session" });
    }
    if (method === "POST" && path === "/sessions") {
      return this.json(201, { session_id: "s1", home_id: "den" });
    }
    if (method === "GET" && path === "/sessions/s1/state") {
      return this.json(200, { home_id: "den", state: SEED });
    }
    if (method === "GET" && path === "/sessions/s1/events.json") {
      if (this.failEventsOnce) {
        this.failEventsOnce = false;
        throw new TypeError("network down");
      }
      const cursor = Number(new URLSearchParams(query).get("cursor") ?? "0");
      return this.json(200, {
        events: this.rows.filter((row) => row.cursor > cursor),
        cursor: this.rows.length,
      });
    }
    if (method === "POST" && path === "/sessions/s1/message") {
      this.push("UserMessage", { text: body["text"] ?? "" });
      for (const step of CHAIN) {
        this.push("ChainStep", { step, status: "running" });
        this.push("ChainStep", { step, status: "done" });
      }
      this.propose(String(body["text"] ?? ""));
      return this.json(202, { accepted: true, cursor: this.rows.length });
    }
    const resolve = path?.match(/^\/sessions\/s1\/plans\/(.+)\/resolve$/);
    if (method === "POST" && resolve !== null && resolve !== undefined) {
      const planId = resolve[1]!;
      if (this.pending !== planId) {
        return this.json(409, { code: "NoPendingPlan", message: `no pending plan '${planId}'` });
      }
      if (body["verdict"] === "accept") {
        this.pending = null;
        this.push("PlanResolved", { plan_id: planId, resolution: "accepted" });
        this.push("StateChanged", {
          changes: [
            { room: "den", device: "lamp", setting: "state", before: false, after: true },
            { room: "den", device: "lamp", setting: "brightness", before: 0.1, after: 0.8 },
          ],
          source: "plan",
        });
        return this.json(200, { resolved: "accepted", installed: false });
      }
      const critique = typeof body["critique"] === "string" ? body["critique"].trim() : "";
      this.pending = null;
      this.push("PlanResolved", { plan_id: planId, resolution: "rejected" });
      if (critique === "") return this.json(200, { resolved: "rejected" });
      this.push("ChainStep", { step: "feedback_revise", status: "running" });
      this.push("ChainStep", { step: "feedback_revise", status: "done" });
      const newId = this.propose("make it cozy", planId);
      return this.json(200, { resolved: "revised", plan_id: newId });
    }
    return this.json(404, { code: "NotFound", message: path ?? url });
  };
}

interface Rig {
  server: ScriptedServer;
  controller: Controller;
  feed: EventFeed;
  connections: string[];
}

async function rig(): Promise<Rig> {
  const server = new ScriptedServer();
  const client = new ServiceClient("", server.fetch);
  const session = await client.createSession({});
  const seed = await client.state(session.session_id);
  const controller = new Controller(client, session.session_id, seed.state);
  const connections: string[] = [];
  const feed = new EventFeed(client, session.session_id, {
    onEvent: (row) => controller.applyEvent(row),
    onConnection: (status) => {
      connections.push(status);
      controller.connection(status);
    },
  });
  return { server, controller, feed, connections };
}

describe("command to plan card", () => {
  let r: Rig;
  beforeEach(async () => {
    r = await rig();
  });

  it("posts the message and builds the card from the event stream", async () => {
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();
    const view = r.controller.view;
    expect(view.transcript[0]).toMatchObject({ kind: "user", text: "make it cozy" });
    expect(view.pending?.planId).toBe("p1");
    expect(view.pending?.diff).toContainEqual({
      room: "den",
      device: "amp",
      setting: "state",
      value: true,
    });
    expect(view.chain.active).toBe(false);
    expect(view.chain.steps.every((s) => s.status === "done")).toBe(true);
    // nothing moved yet: proposals must not touch the home
    expect(view.state).toEqual(SEED);
  });
});

describe("accept round trip", () => {
  it("collapses the card and highlights the changed devices", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();

    const verdict = r.controller.submitVerdict("p1", { verdict: "accept" });
    // optimistic: controls freeze before the server answers
    expect(r.controller.ui.resolving).toBe("p1");
    await verdict;
    await r.feed.pump();

    const view = r.controller.view;
    expect(view.pending).toBeNull();
    expect(r.controller.ui.resolving).toBeNull();
    expect(view.history.map((c) => [c.planId, c.status])).toEqual([["p1", "accepted"]]);
    expect(view.state["den"]?.["lamp"]?.["state"]).toBe(true);
    expect(view.highlights).toEqual(["den/lamp/state", "den/lamp/brightness"]);
    const planTurn = view.transcript.find((t) => t.planId === "p1");
    expect(planTurn?.resolution).toBe("accepted");
  });
});

describe("revise round trip", () => {
  it("replaces the card with the revision and keeps the lineage", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();

    await r.controller.submitVerdict("p1", { verdict: "reject", critique: "skip the amp" });
    await r.feed.pump();

    const view = r.controller.view;
    expect(view.pending?.planId).toBe("p2");
    expect(view.pending?.revisedFrom).toBe("p1");
    expect(view.pending?.diff.some((d) => d.device === "amp")).toBe(false);
    expect(view.history.map((c) => [c.planId, c.status])).toEqual([["p1", "rejected"]]);
    expect(view.chain.steps.at(-1)).toEqual({ step: "feedback_revise", status: "done" });
    // the critique box closed when the new card arrived
    expect(r.controller.ui.critiqueOpen).toBe(false);

    await r.controller.submitVerdict("p2", { verdict: "accept" });
    await r.feed.pump();
    expect(r.controller.view.pending).toBeNull();
    expect(r.controller.view.state["den"]?.["amp"]?.["state"]).toBe(false);
  });
});

describe("verdict errors", () => {
  it("surfaces NoPendingPlan as a toast and unfreezes", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();

    await r.controller.submitVerdict("p9", { verdict: "accept" });
    expect(r.controller.ui.resolving).toBeNull();
    expect(r.controller.ui.toasts.map((t) => t.text).join()).toContain("NoPendingPlan");
    // the real pending card is untouched
    expect(r.controller.view.pending?.planId).toBe("p1");
  });

  it("surfaces an expired session as an error toast", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();

    r.server.expired = true;
    await r.controller.submitVerdict("p1", { verdict: "accept" });
    expect(r.controller.ui.toasts.map((t) => t.text).join()).toContain("SessionExpired");
    expect(r.controller.ui.resolving).toBeNull();
  });
});

describe("feed recovery", () => {
  it("reports the drop, then resumes from its cursor without duplicates", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();
    const turns = r.controller.view.transcript.length;

    r.server.failEventsOnce = true;
    await expect(r.feed.pump()).rejects.toThrow("network down");
    expect(r.connections.at(-1)).toBe("reconnecting");
    expect(r.controller.ui.connection).toBe("reconnecting");

    await r.feed.pump();
    expect(r.connections.at(-1)).toBe("live");
    expect(r.controller.view.transcript.length).toBe(turns);
  });

  it("a cold replay of the same log lands on the same view", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();
    await r.controller.submitVerdict("p1", { verdict: "reject", critique: "skip the amp" });
    await r.feed.pump();
    await r.controller.submitVerdict("p2", { verdict: "accept" });
    await r.feed.pump();

    const fresh = await rigFrom(r.server);
    await fresh.feed.pump();
    expect(fresh.controller.view).toEqual(r.controller.view);
  });
});

async function rigFrom(server: ScriptedServer): Promise<Rig> {
  const client = new ServiceClient("", server.fetch);
  const seed = await client.state("s1");
  const controller = new Controller(client, "s1", seed.state);
  const connections: string[] = [];
  const feed = new EventFeed(client, "s1", {
    onEvent: (row) => controller.applyEvent(row),
    onConnection: (status) => connections.push(status),
  });
  return { server, controller, feed, connections };
}

describe("mutation discipline", () => {
  it("issues no writes besides session bootstrap, messages, and verdicts", async () => {
    const r = await rig();
    await r.controller.sendCommand("make it cozy");
    await r.feed.pump();
    await r.controller.submitVerdict("p1", { verdict: "accept" });
    await r.feed.pump();

    for (const req of r.server.requests) {
      if (req.method === "GET") continue;
      expect(req.method).toBe("POST");
      expect(
        req.url === "/sessions" ||
          req.url.endsWith("/message") ||
          req.url.endsWith("/resolve"),
      ).toBe(true);
    }
  });
});
