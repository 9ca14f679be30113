"""Brute-force reference for routine firing over sensor timelines.

Deliberately shares no code with the engine under test: it re-evaluates every
routine's trigger predicate at every snapshot directly from the raw JSON
documents (string times and all) and diffs consecutive truth values. Kept
simple and slow on purpose.
"""

from __future__ import annotations


def minutes_of(value) -> int:
    """Minutes past midnight from an int or a clock string. No regex."""
    if isinstance(value, bool):
        raise ValueError("booleans are not times")
    if isinstance(value, int):
        return value
    text = str(value).strip().lower()
    meridiem = None
    for suffix in ("am", "pm"):
        if text.endswith(suffix):
            meridiem = suffix
            text = text[: -len(suffix)].strip()
            break
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise ValueError(f"bad time {value!r}")
    hour, minute = int(parts[0]), int(parts[1])  # seconds, if present, floored away
    if meridiem == "am" and hour == 12:
        hour = 0
    elif meridiem == "pm" and hour != 12:
        hour += 12
    return hour * 60 + minute


def condition_holds(sensor_type: str, wanted, actual) -> bool:
    if sensor_type == "time":
        return minutes_of(wanted) == minutes_of(actual)
    if sensor_type == "str":
        return str(wanted).lower() in str(actual).lower()
    if sensor_type == "bool":
        return bool(wanted) == bool(actual)
    # int / float
    return float(wanted) == float(actual)


def trigger_holds(trigger_doc: dict, sensors: dict, sensor_types: dict) -> bool:
    """Conjunction over every (scope, sensor, wanted value) in the trigger."""
    for scope, wanted_by_name in trigger_doc.items():
        for name, wanted in wanted_by_name.items():
            if scope not in sensors or name not in sensors[scope]:
                return False
            if not condition_holds(sensor_types[scope][name], wanted, sensors[scope][name]):
                return False
    return True


def expected_firings(
    routines: list[tuple[str, dict]],
    timeline: list[dict],
    sensor_types: dict,
) -> list[list[str]]:
    """Routine ids fired at each snapshot, edge-triggered.

    routines: (routine id, raw trigger document) in install order.
    timeline: snapshot dicts, each with a "sensors" map.
    sensor_types: raw sensors document (scope -> name -> type label).
    """
    prior = {rid: False for rid, _ in routines}
    fired_per_snapshot = []
    for snapshot in timeline:
        fired = []
        for rid, trigger_doc in routines:
            now = trigger_holds(trigger_doc, snapshot["sensors"], sensor_types)
            if now and not prior[rid]:
                fired.append(rid)
            prior[rid] = now
        fired_per_snapshot.append(fired)
    return fired_per_snapshot
