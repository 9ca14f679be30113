"""Interpret raw model output as action plans.

The pipeline is: extract_json pulls the first parseable JSON object out of
free text, classify_validity grades its structure against the home template,
and parse_plan turns a structurally valid document into a typed plan. The
four validity classes partition every possible response string.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum

from .home import (
    GLOBAL_SCOPE,
    HomeTemplate,
    SettingType,
    coerce_value,
    value_to_json,
)

logger = logging.getLogger(__name__)

EXPLANATION_KEY = "explanation"


class GoalType(str, Enum):
    IMMEDIATE = "immediate"
    PERSISTENT = "persistent"


class ValidityClass(str, Enum):
    VALID = "valid"
    INVALID_MALFORMED = "invalid_malformed"
    INVALID_STRUCTURE_MUTATED = "invalid_structure_mutated"
    INVALID_ROOMS_STRIPPED = "invalid_rooms_stripped"


class PlanError(ValueError):
    pass


class ValueTypeMismatch(PlanError):
    pass


class UnknownSensorPath(PlanError):
    pass


class EmptyPlan(PlanError):
    pass


# ---------------------------------------------------------------------------
# JSON extraction


def extract_json(raw: str):
    """First balanced {...} span in raw that parses as strict JSON, or None.

    Candidate spans are scanned left to right; a span that fails to parse
    (apostrophes for quotes, trailing commas, Python source) is skipped and
    the scan continues from the next opening brace.
    """
    if not isinstance(raw, str):
        return None
    for start in range(len(raw)):
        if raw[start] != "{":
            continue
        end = _balanced_end(raw, start)
        if end is None:
            continue
        try:
            return json.loads(raw[start : end + 1])
        except json.JSONDecodeError:
            continue
    return None


def _balanced_end(raw: str, start: int):
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None


# ---------------------------------------------------------------------------
# Validity classification


def classify_validity(template: HomeTemplate, raw: str, goal: GoalType) -> ValidityClass:
    """Grade a raw response against the template. Total and deterministic.

    Within one document the first violation in document order decides the
    class, except that a response whose devices sit at the top level with
    no room nesting is graded rooms-stripped before anything else.
    """
    doc = extract_json(raw)
    if not isinstance(doc, dict):
        return ValidityClass.INVALID_MALFORMED
    if goal is GoalType.IMMEDIATE:
        return _classify_assignments(template, doc)
    if "trigger" not in doc or "action" not in doc:
        return ValidityClass.INVALID_MALFORMED
    trigger_cls = _classify_trigger(template, doc["trigger"])
    if trigger_cls is not ValidityClass.VALID:
        return trigger_cls
    return _classify_assignments(template, doc["action"])


def _classify_assignments(template: HomeTemplate, doc) -> ValidityClass:
    if not isinstance(doc, dict):
        return ValidityClass.INVALID_MALFORMED
    body = {k: v for k, v in doc.items() if k != EXPLANATION_KEY}
    rooms = template.room_names()
    device_names = template.device_name_set()
    if not any(k in rooms for k in body) and any(k in device_names for k in body):
        return ValidityClass.INVALID_ROOMS_STRIPPED
    for room, room_doc in body.items():
        if room not in rooms:
            return ValidityClass.INVALID_STRUCTURE_MUTATED
        if not isinstance(room_doc, dict):
            return ValidityClass.INVALID_MALFORMED
        for device, device_doc in room_doc.items():
            if device not in template.devices[room]:
                return ValidityClass.INVALID_STRUCTURE_MUTATED
            if not isinstance(device_doc, dict):
                return ValidityClass.INVALID_MALFORMED
            for setting in device_doc:
                if setting == EXPLANATION_KEY:
                    continue
                if setting not in template.devices[room][device]:
                    return ValidityClass.INVALID_STRUCTURE_MUTATED
    return ValidityClass.VALID


def _classify_trigger(template: HomeTemplate, doc) -> ValidityClass:
    if not isinstance(doc, dict):
        return ValidityClass.INVALID_MALFORMED
    scopes = template.room_names() | {GLOBAL_SCOPE}
    sensor_names = {name for _, name, _ in template.iter_sensors()}
    if not any(k in scopes for k in doc) and any(k in sensor_names for k in doc):
        return ValidityClass.INVALID_ROOMS_STRIPPED
    for scope, scope_doc in doc.items():
        if scope not in scopes:
            return ValidityClass.INVALID_STRUCTURE_MUTATED
        if not isinstance(scope_doc, dict):
            return ValidityClass.INVALID_MALFORMED
        for name in scope_doc:
            if name not in template.sensors.get(scope, {}):
                return ValidityClass.INVALID_STRUCTURE_MUTATED
    return ValidityClass.VALID


# ---------------------------------------------------------------------------
# Typed plans

Assignments = dict  # room -> device -> setting -> concrete value


@dataclass(frozen=True)
class ImmediatePlan:
    assignments: Assignments
    explanation: str = ""


@dataclass(frozen=True)
class RoutinePlan:
    trigger: dict  # scope -> sensor -> trigger value
    action: Assignments
    explanation: str = ""


ActionPlan = ImmediatePlan | RoutinePlan


def parse_plan(template: HomeTemplate, doc, goal: GoalType) -> ActionPlan:
    """Turn a structurally valid response document into a typed plan.

    Values are coerced against the template's setting types. Trigger values
    are typed when the sensor is machine-checkable; values for string
    sensors stay free-form (matched by substring during simulation).
    """
    if not isinstance(doc, dict):
        raise PlanError("plan document must be a JSON object")
    explanation = doc.get(EXPLANATION_KEY, "")
    if not isinstance(explanation, str):
        explanation = json.dumps(explanation)
    if goal is GoalType.IMMEDIATE:
        assignments = _parse_assignments(template, doc)
        if not _assignment_count(assignments):
            raise EmptyPlan("plan assigns no settings")
        return ImmediatePlan(assignments=assignments, explanation=explanation)
    if "trigger" not in doc or "action" not in doc:
        raise PlanError("routine document must contain trigger and action")
    trigger = _parse_trigger(template, doc["trigger"])
    action = _parse_assignments(template, doc["action"])
    if not trigger:
        raise EmptyPlan("routine has an empty trigger")
    if not _assignment_count(action):
        raise EmptyPlan("routine action assigns no settings")
    return RoutinePlan(trigger=trigger, action=action, explanation=explanation)


def _parse_assignments(template: HomeTemplate, doc) -> Assignments:
    if not isinstance(doc, dict):
        raise PlanError("assignments must be a JSON object")
    out: Assignments = {}
    for room, room_doc in doc.items():
        if room == EXPLANATION_KEY:
            continue
        if room not in template.devices:
            raise PlanError(f"unknown room {room!r}")
        if not isinstance(room_doc, dict):
            raise PlanError(f"room {room!r} must map devices to settings")
        for device, device_doc in room_doc.items():
            if device not in template.devices[room]:
                raise PlanError(f"unknown device {room}/{device}")
            if not isinstance(device_doc, dict):
                raise PlanError(f"device {room}/{device} must map settings to values")
            for setting, value in device_doc.items():
                if setting == EXPLANATION_KEY:
                    continue
                stype = template.devices[room][device].get(setting)
                if stype is None:
                    raise PlanError(f"unknown setting {room}/{device}/{setting}")
                try:
                    coerced = coerce_value(stype, value)
                except ValueError as exc:
                    raise ValueTypeMismatch(
                        f"{room}/{device}/{setting}: {exc}"
                    ) from exc
                out.setdefault(room, {}).setdefault(device, {})[setting] = coerced
    return out


def _parse_trigger(template: HomeTemplate, doc) -> dict:
    if not isinstance(doc, dict):
        raise PlanError("trigger must be a JSON object")
    out: dict = {}
    for scope, scope_doc in doc.items():
        if not isinstance(scope_doc, dict):
            raise PlanError(f"trigger scope {scope!r} must map sensors to values")
        for name, value in scope_doc.items():
            try:
                stype = template.sensor_type(scope, name)
            except KeyError as exc:
                raise UnknownSensorPath(str(exc)) from exc
            if stype is SettingType.STR:
                if not isinstance(value, str):
                    raise ValueTypeMismatch(
                        f"trigger {scope}/{name}: expected a string, got {value!r}"
                    )
                coerced = value
            else:
                try:
                    coerced = coerce_value(stype, value)
                except ValueError as exc:
                    raise ValueTypeMismatch(f"trigger {scope}/{name}: {exc}") from exc
            out.setdefault(scope, {})[name] = coerced
    return out


def _assignment_count(assignments: Assignments) -> int:
    return sum(
        len(settings)
        for devices in assignments.values()
        for settings in devices.values()
    )


def freeform_trigger_paths(
    template: HomeTemplate, plan: RoutinePlan
) -> tuple[tuple[str, str], ...]:
    """Trigger entries that can only be matched by substring, not by type."""
    paths = []
    for scope, sensors in plan.trigger.items():
        for name in sensors:
            if template.sensor_type(scope, name) is SettingType.STR:
                paths.append((scope, name))
    return tuple(paths)


# ---------------------------------------------------------------------------
# Serialization and diffing


def plan_to_doc(template: HomeTemplate, plan: ActionPlan) -> dict:
    """Canonical JSON document for a plan (inverse of parse_plan)."""
    if isinstance(plan, ImmediatePlan):
        doc = _assignments_to_doc(template, plan.assignments)
        doc[EXPLANATION_KEY] = plan.explanation
        return doc
    trigger = {
        scope: {
            name: value_to_json(template.sensor_type(scope, name), value)
            for name, value in sensors.items()
        }
        for scope, sensors in plan.trigger.items()
    }
    return {
        "trigger": trigger,
        "action": _assignments_to_doc(template, plan.action),
        EXPLANATION_KEY: plan.explanation,
    }


def _assignments_to_doc(template: HomeTemplate, assignments: Assignments) -> dict:
    return {
        room: {
            device: {
                setting: value_to_json(
                    template.devices[room][device][setting], value
                )
                for setting, value in settings.items()
            }
            for device, settings in devices.items()
        }
        for room, devices in assignments.items()
    }


def serialize_plan(template: HomeTemplate, plan: ActionPlan) -> str:
    return json.dumps(plan_to_doc(template, plan), sort_keys=True)


def plan_from_doc(template: HomeTemplate, doc, goal: GoalType) -> ActionPlan:
    return parse_plan(template, doc, goal)


@dataclass(frozen=True)
class PlanChange:
    room: str
    device: str
    setting: str
    value: object


@dataclass(frozen=True)
class PlanDiff:
    changes: tuple[PlanChange, ...]
    touched_devices: int
    touched_rooms: frozenset
    freeform_triggers: tuple[tuple[str, str], ...] = ()


def diff_plan(template: HomeTemplate, plan: ActionPlan) -> PlanDiff:
    """Enumerate the settings a plan proposes to change."""
    assignments = plan.assignments if isinstance(plan, ImmediatePlan) else plan.action
    changes = []
    devices = set()
    for room in sorted(assignments):
        for device in sorted(assignments[room]):
            devices.add((room, device))
            for setting in sorted(assignments[room][device]):
                changes.append(
                    PlanChange(room, device, setting, assignments[room][device][setting])
                )
    freeform = (
        freeform_trigger_paths(template, plan)
        if isinstance(plan, RoutinePlan)
        else ()
    )
    return PlanDiff(
        changes=tuple(changes),
        touched_devices=len(devices),
        touched_rooms=frozenset(room for room, _ in devices),
        freeform_triggers=freeform,
    )


@dataclass(frozen=True)
class InterpretedResponse:
    validity: ValidityClass
    plan: ActionPlan | None
    error: str | None = None


def interpret_response(
    template: HomeTemplate, raw: str, goal: GoalType
) -> InterpretedResponse:
    """Classify a raw response and, when structurally valid, parse it."""
    validity = classify_validity(template, raw, goal)
    if validity is not ValidityClass.VALID:
        return InterpretedResponse(validity=validity, plan=None)
    try:
        plan = parse_plan(template, extract_json(raw), goal)
    except PlanError as exc:
        return InterpretedResponse(
            validity=ValidityClass.VALID, plan=None, error=str(exc)
        )
    return InterpretedResponse(validity=validity, plan=plan)
