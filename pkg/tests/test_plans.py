"""Plan parsing, validity grading, and diffing against a home template."""

import json

import pytest

from hearth.plans import (
    EmptyPlan,
    GoalType,
    ImmediatePlan,
    PlanError,
    RoutinePlan,
    UnknownSensorPath,
    ValidityClass,
    ValueTypeMismatch,
    classify_validity,
    diff_plan,
    extract_json,
    freeform_trigger_paths,
    interpret_response,
    parse_plan,
    plan_from_doc,
    plan_to_doc,
    serialize_plan,
)


class TestExtractJson:
    def test_bare_object(self):
        assert extract_json('{"a": 1}') == {"a": 1}

    def test_prose_wrapped(self):
        raw = 'Sure! Here is the updated JSON:\n\n{"a": true}\n\nLet me know.'
        assert extract_json(raw) == {"a": True}

    def test_fenced_block(self):
        raw = '```json\n{"a": [1, 2]}\n```'
        assert extract_json(raw) == {"a": [1, 2]}

    def test_apostrophe_quotes_fail(self):
        assert extract_json("{'state': True}") is None

    def test_trailing_comma_fails(self):
        assert extract_json('{"a": 1,}') is None

    def test_skips_unparseable_candidates(self):
        raw = "{'bad': 1} then {\"good\": 2}"
        assert extract_json(raw) == {"good": 2}

    def test_unbalanced_outer_salvages_inner(self):
        # the outer object never closes, the nested one does
        raw = '{"livingroom": {"overhead_light": {"state": true}}'
        assert extract_json(raw) == {"overhead_light": {"state": True}}

    def test_braces_inside_strings_ignored(self):
        raw = '{"note": "brace } inside", "n": 1}'
        assert extract_json(raw) == {"note": "brace } inside", "n": 1}

    def test_no_json_at_all(self):
        assert extract_json("for light in lights: light.on()") is None
        assert extract_json("") is None
        assert extract_json(None) is None


class TestClassifyValidity:
    def test_valid_immediate(self, h1):
        raw = json.dumps(
            {
                "livingroom": {"overhead_light": {"state": True}},
                "explanation": "turning the light on",
            }
        )
        assert classify_validity(h1, raw, GoalType.IMMEDIATE) is ValidityClass.VALID

    def test_malformed_immediate(self, h1):
        assert (
            classify_validity(h1, "{'livingroom': {'overhead_light': 1}}", GoalType.IMMEDIATE)
            is ValidityClass.INVALID_MALFORMED
        )

    def test_unknown_device_is_structure_mutated(self, h1):
        raw = json.dumps({"kitchen": {"coffee_maker": {"state": True}}})
        assert (
            classify_validity(h1, raw, GoalType.IMMEDIATE)
            is ValidityClass.INVALID_STRUCTURE_MUTATED
        )

    def test_hoisted_devices_are_rooms_stripped(self, h1):
        raw = json.dumps({"overhead_light": {"state": True}})
        assert (
            classify_validity(h1, raw, GoalType.IMMEDIATE)
            is ValidityClass.INVALID_ROOMS_STRIPPED
        )

    def test_rooms_stripped_wins_over_mutation(self, h1):
        # hoisted known device next to an invented key: graded rooms-stripped
        raw = json.dumps({"floor_lamp": {"state": True}, "made_up": {"x": 1}})
        assert (
            classify_validity(h1, raw, GoalType.IMMEDIATE)
            is ValidityClass.INVALID_ROOMS_STRIPPED
        )

    def test_routine_requires_trigger_and_action(self, h1):
        raw = json.dumps({"livingroom": {"overhead_light": {"state": True}}})
        assert (
            classify_validity(h1, raw, GoalType.PERSISTENT)
            is ValidityClass.INVALID_MALFORMED
        )

    def test_valid_routine(self, h1):
        raw = json.dumps(
            {
                "trigger": {"global": {"local_time": "7:00AM"}},
                "action": {"bedroom": {"bedside_lamp": {"state": True}}},
                "explanation": "wake-up light",
            }
        )
        assert classify_validity(h1, raw, GoalType.PERSISTENT) is ValidityClass.VALID

    def test_unknown_trigger_sensor_is_mutation(self, h1):
        raw = json.dumps(
            {
                "trigger": {"global": {"humidity": 40}},
                "action": {"bedroom": {"bedside_lamp": {"state": True}}},
            }
        )
        assert (
            classify_validity(h1, raw, GoalType.PERSISTENT)
            is ValidityClass.INVALID_STRUCTURE_MUTATED
        )

    def test_hoisted_trigger_sensors_are_rooms_stripped(self, h1):
        raw = json.dumps(
            {
                "trigger": {"local_time": "7:00AM"},
                "action": {"bedroom": {"bedside_lamp": {"state": True}}},
            }
        )
        assert (
            classify_validity(h1, raw, GoalType.PERSISTENT)
            is ValidityClass.INVALID_ROOMS_STRIPPED
        )


class TestParsePlan:
    def test_immediate_coerces_values(self, h1):
        doc = {
            "livingroom": {
                "overhead_light": {
                    "state": True,
                    "brightness": 0.5,
                    "color": {"r": 255, "g": 147, "b": 41},
                }
            },
            "explanation": "warm half glow",
        }
        plan = parse_plan(h1, doc, GoalType.IMMEDIATE)
        assert isinstance(plan, ImmediatePlan)
        light = plan.assignments["livingroom"]["overhead_light"]
        assert light["state"] is True
        assert light["color"] == {"r": 255, "g": 147, "b": 41}
        assert plan.explanation == "warm half glow"

    def test_value_type_mismatch(self, h1):
        doc = {"livingroom": {"overhead_light": {"brightness": "high"}}}
        with pytest.raises(ValueTypeMismatch):
            parse_plan(h1, doc, GoalType.IMMEDIATE)

    def test_unknown_paths_rejected(self, h1):
        with pytest.raises(PlanError):
            parse_plan(h1, {"garage": {}}, GoalType.IMMEDIATE)
        with pytest.raises(PlanError):
            parse_plan(
                h1, {"kitchen": {"dishwasher": {"state": True}}}, GoalType.IMMEDIATE
            )
        with pytest.raises(PlanError):
            parse_plan(
                h1, {"kitchen": {"overhead_light": {"hue": 1}}}, GoalType.IMMEDIATE
            )

    def test_empty_plans_rejected(self, h1):
        with pytest.raises(EmptyPlan):
            parse_plan(h1, {}, GoalType.IMMEDIATE)
        with pytest.raises(EmptyPlan):
            parse_plan(h1, {"explanation": "nothing to do"}, GoalType.IMMEDIATE)

    def test_routine_trigger_coercion(self, h1):
        doc = {
            "trigger": {"global": {"local_time": "7:00AM"}},
            "action": {"bedroom": {"bedside_lamp": {"state": True}}},
        }
        plan = parse_plan(h1, doc, GoalType.PERSISTENT)
        assert isinstance(plan, RoutinePlan)
        assert plan.trigger["global"]["local_time"] == 7 * 60

    def test_routine_freeform_string_trigger(self, h1):
        doc = {
            "trigger": {"global": {"weather": "rain expected"}},
            "action": {"entry": {"overhead_light": {"state": True}}},
        }
        plan = parse_plan(h1, doc, GoalType.PERSISTENT)
        assert plan.trigger["global"]["weather"] == "rain expected"
        assert freeform_trigger_paths(h1, plan) == (("global", "weather"),)

    def test_typed_trigger_is_not_freeform(self, h1):
        doc = {
            "trigger": {"bedroom": {"motion": "10:00PM"}},
            "action": {"bedroom": {"bedside_lamp": {"state": False}}},
        }
        plan = parse_plan(h1, doc, GoalType.PERSISTENT)
        assert freeform_trigger_paths(h1, plan) == ()

    def test_string_sensor_rejects_non_string(self, h1):
        doc = {
            "trigger": {"global": {"weather": 3}},
            "action": {"entry": {"overhead_light": {"state": True}}},
        }
        with pytest.raises(ValueTypeMismatch):
            parse_plan(h1, doc, GoalType.PERSISTENT)

    def test_unknown_sensor_path(self, h1):
        doc = {
            "trigger": {"global": {"humidity": 40}},
            "action": {"entry": {"overhead_light": {"state": True}}},
        }
        with pytest.raises(UnknownSensorPath):
            parse_plan(h1, doc, GoalType.PERSISTENT)

    def test_routine_empty_parts_rejected(self, h1):
        with pytest.raises(EmptyPlan):
            parse_plan(
                h1,
                {"trigger": {}, "action": {"entry": {"overhead_light": {"state": True}}}},
                GoalType.PERSISTENT,
            )
        with pytest.raises(EmptyPlan):
            parse_plan(
                h1,
                {"trigger": {"global": {"local_time": "7:00AM"}}, "action": {}},
                GoalType.PERSISTENT,
            )

    def test_non_string_explanation_survives(self, h1):
        doc = {
            "livingroom": {"overhead_light": {"state": True}},
            "explanation": {"because": "asked"},
        }
        plan = parse_plan(h1, doc, GoalType.IMMEDIATE)
        assert json.loads(plan.explanation) == {"because": "asked"}


class TestRoundTrip:
    def test_immediate(self, h1):
        doc = {
            "bedroom": {
                "bedside_lamp": {"state": True, "brightness": 0.25},
                "overhead_light": {"state": False},
            },
            "explanation": "night mode",
        }
        plan = parse_plan(h1, doc, GoalType.IMMEDIATE)
        again = plan_from_doc(h1, plan_to_doc(h1, plan), GoalType.IMMEDIATE)
        assert again == plan
        assert serialize_plan(h1, again) == serialize_plan(h1, plan)

    def test_routine_with_time_trigger(self, h1):
        doc = {
            "trigger": {"global": {"local_time": "10:30PM"}},
            "action": {"bathroom": {"overhead_light": {"brightness": 0.1}}},
            "explanation": "dim for the night",
        }
        plan = parse_plan(h1, doc, GoalType.PERSISTENT)
        round_doc = plan_to_doc(h1, plan)
        assert round_doc["trigger"]["global"]["local_time"] == "22:30"
        assert plan_from_doc(h1, round_doc, GoalType.PERSISTENT) == plan


class TestDiffPlan:
    def test_counts_settings_devices_rooms(self, h1):
        doc = {
            "livingroom": {
                "overhead_light": {"state": True, "brightness": 1.0},
                "floor_lamp": {"state": True},
            },
            "kitchen": {"overhead_light": {"state": True}},
        }
        diff = diff_plan(h1, parse_plan(h1, doc, GoalType.IMMEDIATE))
        assert len(diff.changes) == 4
        assert diff.touched_devices == 3
        assert diff.touched_rooms == frozenset({"livingroom", "kitchen"})
        assert diff.freeform_triggers == ()

    def test_changes_are_sorted(self, h1):
        doc = {
            "kitchen": {"overhead_light": {"state": True}},
            "bedroom": {"bedside_lamp": {"state": True}},
        }
        diff = diff_plan(h1, parse_plan(h1, doc, GoalType.IMMEDIATE))
        assert [c.room for c in diff.changes] == ["bedroom", "kitchen"]

    def test_routine_diff_reads_action_and_flags_freeform(self, h1):
        doc = {
            "trigger": {"global": {"weather": "snow"}},
            "action": {"entry": {"overhead_light": {"state": True}}},
        }
        diff = diff_plan(h1, parse_plan(h1, doc, GoalType.PERSISTENT))
        assert diff.touched_devices == 1
        assert diff.freeform_triggers == (("global", "weather"),)


class TestInterpretResponse:
    def test_valid_response_yields_plan(self, h1):
        raw = 'Here you go:\n{"livingroom": {"floor_lamp": {"state": true}}}'
        got = interpret_response(h1, raw, GoalType.IMMEDIATE)
        assert got.validity is ValidityClass.VALID
        assert isinstance(got.plan, ImmediatePlan)
        assert got.error is None

    def test_invalid_response_has_no_plan(self, h1):
        got = interpret_response(h1, "{'nope': 1}", GoalType.IMMEDIATE)
        assert got.validity is ValidityClass.INVALID_MALFORMED
        assert got.plan is None

    def test_structurally_valid_but_empty(self, h1):
        # classification passes, parsing still refuses a plan with no settings
        got = interpret_response(h1, '{"explanation": "all set"}', GoalType.IMMEDIATE)
        assert got.validity is ValidityClass.VALID
        assert got.plan is None
        assert got.error is not None

    def test_value_mismatch_reported_as_error(self, h1):
        raw = '{"livingroom": {"overhead_light": {"brightness": "max"}}}'
        got = interpret_response(h1, raw, GoalType.IMMEDIATE)
        assert got.validity is ValidityClass.VALID
        assert got.plan is None
        assert "brightness" in got.error
