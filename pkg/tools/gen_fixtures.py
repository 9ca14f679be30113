#!/usr/bin/env python3
"""Regenerate the scripted-backend fixture packs from the home rosters.

Two packs are produced under src/hearth/fixtures/llm/:

  naive_mimic.json  scripted responses for every (home, command) cell of the
                    benchmark. Where a home actually contains devices for the
                    goal, the rules answer sensibly; where it does not, the
                    relevance rule declines but the filter/plan rules fall
                    back to the lights, mimicking the overreach that models
                    show when asked to act on goals the home cannot serve.
                    One deliberate relevance slip is included (h2, "tidy up
                    the house") so the stepwise pipeline keeps a known false
                    positive for the robot category.

  case_study.json   a five-interaction walkthrough of a real-home layout,
                    including one feedback round that removes an overreaching
                    amp-plug assignment.

Output is deterministic; rerunning on unchanged rosters is a no-op diff.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from hearth.evaluation.dataset import load_commands
from hearth.evaluation.metrics import availability_map, load_category_tags
from hearth.home import device_catalog, load_home, load_lexicon
from hearth.plans import GoalType

OUT_DIR = Path(__file__).resolve().parent.parent / "src" / "hearth" / "fixtures" / "llm"

WARM = {"r": 255, "g": 147, "b": 41}
WHITE = {"r": 255, "g": 255, "b": 255}
ORANGE = {"r": 255, "g": 140, "b": 0}
ALERT = {"r": 250, "g": 200, "b": 0}
PARTY = {"r": 128, "g": 0, "b": 255}
CYAN = {"r": 0, "g": 255, "b": 255}
RED = {"r": 255, "g": 0, "b": 0}
GREEN = {"r": 0, "g": 255, "b": 0}


def anchored(command: str) -> str:
    """Match the normalized command exactly, tolerating appended dialogue context."""
    norm = " ".join(command.lower().split())
    return "^" + re.escape(norm) + "(?: ::.*)?$"


def tagged_devices(template, lexicon, tag: str) -> list[tuple[str, str]]:
    return sorted(
        (entry.room, entry.device)
        for entry in device_catalog(template, lexicon, strict=False)
        if entry.tag == tag
    )


def subset_doc(template, pairs) -> dict:
    """Devices document restricted to the given (room, device) pairs."""
    doc: dict = {}
    devices_doc = template.devices_doc()
    for room, device in pairs:
        doc.setdefault(room, {})[device] = devices_doc[room][device]
    return doc


def assign(values_by_device: dict[tuple[str, str], dict]) -> dict:
    doc: dict = {}
    for (room, device), values in sorted(values_by_device.items()):
        doc.setdefault(room, {})[device] = values
    return doc


def sensor_subset(template, trigger: dict) -> dict:
    sensors_doc = template.sensors_doc()
    doc: dict = {}
    for scope, names in trigger.items():
        for name in names:
            doc.setdefault(scope, {})[name] = sensors_doc[scope][name]
    return doc


def lights_on(pairs, extra=None) -> dict:
    values = {"state": True}
    if extra:
        values.update(extra)
    return assign({pair: dict(values) for pair in pairs})


def lights_off(pairs) -> dict:
    return assign({pair: {"state": False} for pair in pairs})


class PackBuilder:
    def __init__(self):
        self.rules = []

    def add(self, kind, response, *, home=None, command=None):
        self.rules.append(
            {"kind": kind, "home": home, "command": command, "response": response}
        )

    def doc(self) -> dict:
        rules = sorted(
            self.rules,
            key=lambda r: (r["kind"], r["home"] or "", r["command"] or ""),
        )
        for rule in rules:
            if rule["home"] is None:
                del rule["home"]
        return {"strict": True, "rules": rules}


RELEVANT_YES = "RELEVANT: true\nI found devices in the home that can help with this."
RELEVANT_NO = (
    "RELEVANT: false\n"
    "I could not find any devices in the home that seem relevant to this goal."
)


def immediate_actions(command: str, template, lexicon) -> dict | None:
    """Assignments for an immediate goal the home can actually serve."""
    lights = tagged_devices(template, lexicon, "light")
    lamps = [p for p in lights if "lamp" in p[1]]
    climate = tagged_devices(template, lexicon, "climate")
    thermostat = [p for p in climate if "thermostat" in p[1]]
    fans = [p for p in climate if "fan" in p[1]]
    entertainment = tagged_devices(template, lexicon, "entertainment")
    stereo = [p for p in entertainment if "stereo" in p[1]]
    security = tagged_devices(template, lexicon, "security")
    locks = [p for p in security if "lock" in p[1]]
    cameras = [p for p in security if "camera" in p[1]]
    vacuums = tagged_devices(template, lexicon, "vacuum")
    appliances = tagged_devices(template, lexicon, "appliance")
    blinds = [p for p in appliances if "blind" in p[1]]
    coffee = [p for p in appliances if "coffee" in p[1]]

    if command == "make it less chilly in here":
        return assign({p: {"state": "heat", "target_temperature": 72} for p in thermostat})
    if command == "help me cool off":
        doc = {p: {"state": "cool", "target_temperature": 68} for p in thermostat}
        doc.update({p: {"state": True, "speed": 2} for p in fans})
        return assign(doc)
    if command == "make it less stuffy in here":
        doc = {p: {"state": "auto"} for p in thermostat}
        doc.update({p: {"state": True, "speed": 3} for p in fans})
        return assign(doc)
    if command == "make it less bright":
        return assign({p: {"brightness": 0.3} for p in lights})
    if command == "get ready for bed":
        return lights_off(lights)
    if command == "help me see better":
        return lights_on(lights, {"brightness": 1.0})
    if command == "check the front door":
        return assign({p: {"state": True} for p in cameras})
    if command == "lock up":
        return assign({p: {"locked": True} for p in locks})
    if command == "let the guest in":
        return assign({p: {"locked": False} for p in locks})
    if command == "set up for a party":
        doc = {p: {"state": True, "brightness": 1.0, "color": PARTY} for p in lights}
        doc.update({p: {"state": True, "playlist": "party mix"} for p in stereo})
        return assign(doc)
    if command == "make it cozy in here":
        return assign({p: {"state": True, "brightness": 0.4, "color": WARM} for p in lamps})
    if command == "help me wind down":
        return assign({p: {"state": True, "brightness": 0.3, "color": WARM} for p in lamps})
    if command == "clean up the bedroom" or command == "tidy up the house":
        return assign({p: {"state": True} for p in vacuums})
    if command == "stop cleaning":
        return assign({p: {"state": False} for p in vacuums})
    if command == "give me some privacy":
        return assign({p: {"open": False} for p in blinds})
    if command == "let some sun in":
        return assign({p: {"open": True} for p in blinds})
    if command == "finish the coffee":
        return assign({p: {"state": True} for p in coffee})
    return None


def persistent_routine(command: str, template, lexicon) -> tuple[dict, dict] | None:
    """(trigger, action) for a persistent goal the home can actually serve."""
    lights = tagged_devices(template, lexicon, "light")
    lamps = [p for p in lights if "lamp" in p[1]]
    climate = tagged_devices(template, lexicon, "climate")
    thermostat = [p for p in climate if "thermostat" in p[1]]
    security = tagged_devices(template, lexicon, "security")
    locks = [p for p in security if "lock" in p[1]]
    cameras = [p for p in security if "camera" in p[1]]
    vacuums = tagged_devices(template, lexicon, "vacuum")
    appliances = tagged_devices(template, lexicon, "appliance")
    blinds = [p for p in appliances if "blind" in p[1]]
    coffee = [p for p in appliances if "coffee" in p[1]]
    plugs = [p for p in appliances if "plug" in p[1]]

    if command == "turn the AC off when it's cold outside":
        return {"entry": {"front_door_temperature": 45}}, assign(
            {p: {"state": "off"} for p in thermostat}
        )
    if command == "turn the heat off when it's hot outside":
        return {"entry": {"front_door_temperature": 85}}, assign(
            {p: {"state": "off"} for p in thermostat}
        )
    if command == "make it comfortable at night":
        return {"global": {"local_time": "10:00PM"}}, assign(
            {p: {"state": "auto", "target_temperature": 70} for p in thermostat}
        )
    if command == "keep it well-lit after sundown":
        return {"global": {"local_time": "7:30PM"}}, lights_on(lights, {"brightness": 0.8})
    if command == "use natural light once the sun is up":
        return {"global": {"local_time": "6:30AM"}}, lights_off(lights)
    if command == "keep the lights off when I'm gone":
        return {"entry": {"motion": "9:00AM"}}, lights_off(lights)
    if command == "lock the door when I leave":
        return {"entry": {"motion": "8:30AM"}}, assign({p: {"locked": True} for p in locks})
    if command == "let me know when there's a visitor":
        return {"entry": {"motion": "12:00PM"}}, assign({p: {"state": True} for p in cameras})
    if command == "keep the home safe during the day":
        doc = {p: {"state": True} for p in cameras}
        doc.update({p: {"locked": True} for p in locks})
        return {"global": {"local_time": "9:00AM"}}, assign(doc)
    if command == "turn off the thermostat when I don't need it":
        if thermostat:
            return {"entry": {"motion": "9:00AM"}}, assign(
                {p: {"state": "off"} for p in thermostat}
            )
        return {"entry": {"motion": "9:00AM"}}, lights_off(lights)
    if command == "save energy when I'm gone":
        doc = {p: {"state": False} for p in lights}
        doc.update({p: {"state": "off"} for p in thermostat})
        return {"entry": {"motion": "9:00AM"}}, assign(doc)
    if command == "help me save energy":
        return {"global": {"local_time": "11:00PM"}}, lights_off(lights)
    if command == "help me lower my power bill":
        return {"global": {"local_time": "11:30PM"}}, lights_off(lights)
    if command == "make it cozy when it rains":
        return {"global": {"weather": "rain"}}, assign(
            {p: {"state": True, "brightness": 0.4, "color": WARM} for p in lamps}
        )
    if command == "let me know when the weather is bad":
        return {"global": {"weather": "storm"}}, assign(
            {("livingroom", "overhead_light"): {"state": True, "color": ALERT}}
        )
    if command == "help me sleep better":
        doc = {("bedroom", "overhead_light"): {"state": False}}
        for pair in lamps:
            if pair[0] == "bedroom":
                doc[pair] = {"state": True, "brightness": 0.2, "color": ORANGE}
        return {"global": {"local_time": "10:00PM"}}, assign(doc)
    if command == "stop cleaning after sunset":
        return {"global": {"local_time": "8:00PM"}}, assign(
            {p: {"state": False} for p in vacuums}
        )
    if command == "don't clean when people are here":
        return {"livingroom": {"motion": "6:00PM"}}, assign(
            {p: {"state": False} for p in vacuums}
        )
    if command == "clean up while I'm gone":
        return {"entry": {"motion": "9:30AM"}}, assign({p: {"state": True} for p in vacuums})
    if command == "keep it humid at night":
        trigger = {"bedroom": {"motion": "10:00PM"}, "global": {"local_time": "10:00PM"}}
        return trigger, assign({p: {"state": True} for p in plugs})
    if command == "I need coffee in the morning":
        return {"global": {"local_time": "7:00AM"}}, assign({p: {"state": True} for p in coffee})
    if command == "let some sun in if the weather is nice":
        return {"global": {"weather": "sunny"}}, assign({p: {"open": True} for p in blinds})
    return None


def fallback_routine(command: str, template, lexicon) -> tuple[dict, dict]:
    """What the mimic does for persistent goals it has no devices for: lights."""
    lights = tagged_devices(template, lexicon, "light")
    served = persistent_routine(command, template, lexicon)
    trigger = served[0] if served else {"global": {"local_time": "8:00PM"}}
    return trigger, lights_on(lights)


def action_devices(doc: dict) -> list[tuple[str, str]]:
    return sorted(
        (room, device) for room, devices in doc.items() for device in devices
    )


def build_naive_mimic() -> dict:
    pack = PackBuilder()
    lexicon = load_lexicon()
    records = load_commands()
    category_tags = load_category_tags()
    templates = {home_id: load_home(home_id) for home_id in ("h1", "h2", "h3")}
    availability = availability_map(templates, lexicon, category_tags)

    for record in records:
        pack.add(
            "classify_goal",
            f"GOAL: {record.goal.value}",
            command=anchored(record.text),
        )

    for home_id, template in templates.items():
        for record in records:
            available = availability[(home_id, record.category)]
            pattern = anchored(record.text)

            relevant = available
            if (home_id, record.text) == ("h2", "tidy up the house"):
                relevant = True
            pack.add(
                "clarify",
                RELEVANT_YES if relevant else RELEVANT_NO,
                home=home_id,
                command=pattern,
            )

            if record.goal is GoalType.IMMEDIATE:
                actions = immediate_actions(record.text, template, lexicon) if available else None
                if actions is None:
                    actions = lights_on(tagged_devices(template, lexicon, "light"))
                plan = dict(actions)
                plan["explanation"] = f"Plan for: {record.text}."
                pack.add(
                    "filter_devices",
                    subset_doc(template, action_devices(actions)),
                    home=home_id,
                    command=pattern,
                )
                pack.add("plan_immediate", plan, home=home_id, command=pattern)
            else:
                routine = persistent_routine(record.text, template, lexicon) if available else None
                if routine is None:
                    routine = fallback_routine(record.text, template, lexicon)
                trigger, action = routine
                pack.add(
                    "filter_devices",
                    subset_doc(template, action_devices(action)),
                    home=home_id,
                    command=pattern,
                )
                pack.add(
                    "filter_sensors",
                    sensor_subset(template, trigger),
                    home=home_id,
                    command=pattern,
                )
                pack.add(
                    "plan_persistent",
                    {
                        "trigger": trigger,
                        "action": action,
                        "explanation": f"Routine for: {record.text}.",
                    },
                    home=home_id,
                    command=pattern,
                )
    return pack.doc()


CASE_HOME = "case_study"
MORNING = "Help me get up in the morning."
COZY = "Can you make the lights a little cozier?"
ARRIVAL = "I'm getting home at 5:00PM today, can you make the living room nice for when I arrive?"
AMP_CRITIQUE = "That sounds nice, but you don't need to turn on the amp."
STUDIO_FUN = "Do something fun with the lights in the studio."


def build_case_study() -> dict:
    pack = PackBuilder()
    template = load_home(CASE_HOME)

    lamp = {"state": True, "brightness": 0.5, "color": WHITE}
    morning_action = {
        "livingroom": {
            "lamp": dict(lamp),
            "stereo": {"state": True, "playlist": "ambient"},
            "thermostat": {"state": "heat", "target_temperature": 72},
        },
        "bedroom": {"lamp": dict(lamp)},
    }
    arrival_action = {
        "livingroom": {
            "lamp": {"state": True, "brightness": 1.0, "color": CYAN},
            "stereo": {"state": True, "playlist": "ambient"},
            "thermostat": {"state": "heat", "target_temperature": 72},
        },
        "studio": {"guitar_amp_plug": {"state": True}},
    }
    arrival_revised = json.loads(json.dumps(arrival_action))
    arrival_revised["studio"]["guitar_amp_plug"]["state"] = False

    warm_lamp = {"state": True, "brightness": 0.5, "color": WARM}
    cozy_assignments = {
        "livingroom": {"lamp": dict(warm_lamp)},
        "bedroom": {"lamp": dict(warm_lamp)},
        "studio": {"lamp_left": dict(warm_lamp), "lamp_right": dict(warm_lamp)},
    }
    fun_assignments = {
        "studio": {
            "lamp_left": {"state": True, "brightness": 1.0, "color": RED},
            "lamp_right": {"state": True, "brightness": 1.0, "color": GREEN},
        }
    }

    goals = {MORNING: "persistent", COZY: "immediate", ARRIVAL: "persistent", STUDIO_FUN: "immediate"}
    for command, goal in goals.items():
        pack.add("classify_goal", f"GOAL: {goal}", command=anchored(command))
        pack.add("clarify", RELEVANT_YES, home=CASE_HOME, command=anchored(command))

    pack.add(
        "filter_devices",
        subset_doc(template, action_devices(morning_action)),
        home=CASE_HOME,
        command=anchored(MORNING),
    )
    pack.add(
        "filter_sensors",
        sensor_subset(template, {"global": {"local_time": "7:00AM"}}),
        home=CASE_HOME,
        command=anchored(MORNING),
    )
    pack.add(
        "plan_persistent",
        {
            "trigger": {"global": {"local_time": "7:00AM"}},
            "action": morning_action,
            "explanation": "Every day at 7:00AM I will turn the livingroom and bedroom "
            "lamps on soft white, play the ambient playlist on the stereo, and set the "
            "thermostat to heat to 72.",
        },
        home=CASE_HOME,
        command=anchored(MORNING),
    )

    cozy_plan = dict(cozy_assignments)
    cozy_plan["explanation"] = "I will set every lamp to a warm amber glow at half brightness."
    pack.add(
        "filter_devices",
        subset_doc(template, action_devices(cozy_assignments)),
        home=CASE_HOME,
        command=anchored(COZY),
    )
    pack.add("plan_immediate", cozy_plan, home=CASE_HOME, command=anchored(COZY))

    pack.add(
        "filter_devices",
        subset_doc(template, action_devices(arrival_action)),
        home=CASE_HOME,
        command=anchored(ARRIVAL),
    )
    pack.add(
        "filter_sensors",
        sensor_subset(template, {"global": {"local_time": "5:00PM"}}),
        home=CASE_HOME,
        command=anchored(ARRIVAL),
    )
    pack.add(
        "plan_persistent",
        {
            "trigger": {"global": {"local_time": "5:00PM"}},
            "action": arrival_action,
            "explanation": "At 5:00PM I will brighten the living room lamp with a cool "
            "cyan, start the ambient playlist, warm the room to 72, and power on the "
            "guitar amp plug.",
        },
        home=CASE_HOME,
        command=anchored(ARRIVAL),
    )
    pack.add(
        "feedback_revise",
        {
            "trigger": {"global": {"local_time": "5:00PM"}},
            "action": arrival_revised,
            "explanation": "At 5:00PM I will brighten the living room lamp with a cool "
            "cyan, start the ambient playlist, and warm the room to 72. The guitar amp "
            "plug stays off.",
        },
        home=CASE_HOME,
        command=re.escape("you don't need to turn on the amp"),
    )

    fun_plan = dict(fun_assignments)
    fun_plan["explanation"] = "Left lamp red, right lamp green, both at full brightness."
    pack.add(
        "filter_devices",
        subset_doc(template, action_devices(fun_assignments)),
        home=CASE_HOME,
        command=anchored(STUDIO_FUN),
    )
    pack.add("plan_immediate", fun_plan, home=CASE_HOME, command=anchored(STUDIO_FUN))

    return pack.doc()


def main() -> None:
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    packs = {
        "naive_mimic.json": build_naive_mimic(),
        "case_study.json": build_case_study(),
    }
    for name, doc in packs.items():
        path = OUT_DIR / name
        path.write_text(json.dumps(doc, indent=4, sort_keys=True) + "\n")
        print(f"wrote {path} ({len(doc['rules'])} rules)")


if __name__ == "__main__":
    main()
