"""Record the console fixture: one scripted session driven end to end.

Drives the HTTP service with the scripted case-study pack and dumps the
full event log plus the state snapshots. The browser console's tests
replay this log through their view reducer, so regenerate it (and the
golden view next to it) whenever the event vocabulary changes:

    python3 tools/record_ui_fixture.py
    cd frontend && npm run build && node test/gen_golden.mjs
"""

import json
import time
from pathlib import Path

from fastapi.testclient import TestClient

from hearth.gateway import ScriptedBackend
from hearth.home import fixture_root
from hearth.service import create_app

MORNING = "Help me get up in the morning."
COZY = "Can you make the lights a little cozier?"
ARRIVAL = "I'm getting home at 5:00PM today, can you make the living room nice for when I arrive?"
AMP_CRITIQUE = "That sounds nice, but you don't need to turn on the amp."
STUDIO_FUN = "Do something fun with the lights in the studio."

OUT = Path(__file__).resolve().parent.parent / "frontend" / "test" / "fixtures"


def drain(client, sid, cursor, until, timeout=10.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        doc = client.get(
            f"/sessions/{sid}/events.json", params={"cursor": cursor, "wait": 0.5}
        ).json()
        for row in doc["events"]:
            cursor = row["cursor"]
            if row["kind"] == until:
                return cursor, row
    raise SystemExit(f"timed out waiting for {until}")


def send(client, sid, text):
    resp = client.post(f"/sessions/{sid}/message", json={"text": text})
    assert resp.status_code == 202, resp.text


def quiet(ts, local_time):
    return {
        "timestamp": ts,
        "sensors": {"global": {"local_time": local_time, "weather": "clear"}},
    }


def main():
    backend = ScriptedBackend.from_file(fixture_root() / "llm" / "case_study.json")
    app = create_app(backend, default_home="case_study")
    client = TestClient(app)

    sid = client.post("/sessions", json={}).json()["session_id"]
    initial_state = client.get(f"/sessions/{sid}/state").json()["state"]
    cursor = 0

    # wake-up routine: proposed, accepted, installed, fired at 7:00
    send(client, sid, MORNING)
    cursor, row = drain(client, sid, cursor, "PlanProposed")
    resp = client.post(
        f"/sessions/{sid}/plans/{row['payload']['plan_id']}/resolve",
        json={"verdict": "accept"},
    )
    assert resp.json()["installed"] is True
    cursor, _ = drain(client, sid, cursor, "RoutineInstalled")
    assert client.post(f"/sessions/{sid}/sensors", json=quiet(1.0, "6:50AM")).json()["fired"] == []
    fired = client.post(f"/sessions/{sid}/sensors", json=quiet(2.0, "7:00AM")).json()["fired"]
    assert fired, "wake-up routine must fire at 7:00"
    cursor, _ = drain(client, sid, cursor, "StateChanged")

    # cozy lights: immediate plan, accepted and applied
    send(client, sid, COZY)
    cursor, row = drain(client, sid, cursor, "PlanProposed")
    client.post(
        f"/sessions/{sid}/plans/{row['payload']['plan_id']}/resolve",
        json={"verdict": "accept"},
    )
    cursor, _ = drain(client, sid, cursor, "StateChanged")

    # arrival routine: first proposal turns the amp on, the critique drops it
    send(client, sid, ARRIVAL)
    cursor, row = drain(client, sid, cursor, "PlanProposed")
    first = row["payload"]
    assert first["plan"]["action"]["studio"]["guitar_amp_plug"]["state"] is True
    resp = client.post(
        f"/sessions/{sid}/plans/{first['plan_id']}/resolve",
        json={"verdict": "reject", "critique": AMP_CRITIQUE},
    ).json()
    assert resp["resolved"] == "revised", resp
    cursor, row = drain(client, sid, cursor, "PlanProposed")
    revised = row["payload"]
    assert revised["revised_from"] == first["plan_id"]
    assert revised["plan"]["action"]["studio"]["guitar_amp_plug"]["state"] is False
    client.post(
        f"/sessions/{sid}/plans/{revised['plan_id']}/resolve", json={"verdict": "accept"}
    )
    cursor, _ = drain(client, sid, cursor, "RoutineInstalled")
    assert client.post(f"/sessions/{sid}/sensors", json=quiet(3.0, "4:50PM")).json()["fired"] == []
    assert client.post(f"/sessions/{sid}/sensors", json=quiet(4.0, "5:00PM")).json()["fired"]
    cursor, _ = drain(client, sid, cursor, "StateChanged")

    # studio party lights
    send(client, sid, STUDIO_FUN)
    cursor, row = drain(client, sid, cursor, "PlanProposed")
    client.post(
        f"/sessions/{sid}/plans/{row['payload']['plan_id']}/resolve",
        json={"verdict": "accept"},
    )
    cursor, _ = drain(client, sid, cursor, "StateChanged")

    events = client.get(f"/sessions/{sid}/events.json", params={"cursor": 0}).json()["events"]
    final_state = client.get(f"/sessions/{sid}/state").json()["state"]

    OUT.mkdir(parents=True, exist_ok=True)
    fixture = {
        "home_id": "case_study",
        "initial_state": initial_state,
        "events": events,
        "final_state": final_state,
    }
    path = OUT / "case_study_log.json"
    path.write_text(json.dumps(fixture, indent=2, sort_keys=True) + "\n")
    kinds = {}
    for row in events:
        kinds[row["kind"]] = kinds.get(row["kind"], 0) + 1
    print(f"wrote {path} ({len(events)} events)")
    for kind in sorted(kinds):
        print(f"  {kind}: {kinds[kind]}")


if __name__ == "__main__":
    main()
