"""Prompt rendering: verbatim openings, required context, stable metadata."""

import json

import pytest

from hearth.prompts import (
    BASELINE_KINDS,
    CHAIN_KINDS,
    MissingContext,
    PromptKind,
    PromptStyle,
    StyleUnsupported,
    dump_doc,
    render_baseline,
    render_chain_step,
)


class TestBaseline:
    def test_immediate_zero_shot_text(self, h1):
        p = render_baseline(PromptKind.BASELINE_IMMEDIATE, h1, "turn on the lights")
        assert p.text.startswith(
            "You are an AI that controls a smart home. You receive user commands "
            "and assign settings to devices in response. Devices:"
        )
        assert "User command: turn on the lights" in p.text
        assert dump_doc(h1.devices_doc()) in p.text
        assert 'Include an "explanation" field in the JSON.' in p.text
        # one-shot plan prompts never carry sensors
        assert "Sensors:" not in p.text

    def test_persistent_zero_shot_carries_sensors(self, h1):
        p = render_baseline(
            PromptKind.BASELINE_PERSISTENT, h1, "wake me up at 7", home_id="h1"
        )
        assert dump_doc(h1.devices_doc()) in p.text
        assert dump_doc(h1.sensors_doc()) in p.text
        assert "Propose a sensor trigger" in p.text
        assert p.home_id == "h1"

    def test_few_shot_shape(self, h1):
        p = render_baseline(
            PromptKind.BASELINE_IMMEDIATE,
            h1,
            "turn on the light",
            style=PromptStyle.FEW_SHOT_COMPLETION,
        )
        # worked examples separated by ### markers, ending on an open cue
        assert p.text.count("###") == 2
        assert p.text.count("User command:") == 3
        assert p.text.rstrip().endswith("Updated JSON:")
        assert p.style is PromptStyle.FEW_SHOT_COMPLETION

    def test_few_shot_persistent_ends_on_automation_cue(self, h1):
        p = render_baseline(
            PromptKind.BASELINE_PERSISTENT,
            h1,
            "water the plants every morning",
            style=PromptStyle.FEW_SHOT_COMPLETION,
        )
        assert p.text.rstrip().endswith("Automation JSON:")

    def test_rejects_chain_kinds(self, h1):
        with pytest.raises(StyleUnsupported):
            render_baseline(PromptKind.CLARIFY, h1, "hello")

    def test_rejects_empty_command(self, h1):
        with pytest.raises(ValueError):
            render_baseline(PromptKind.BASELINE_IMMEDIATE, h1, "")

    def test_digest_tracks_template(self, h1, h2):
        a = render_baseline(PromptKind.BASELINE_IMMEDIATE, h1, "x")
        b = render_baseline(PromptKind.BASELINE_IMMEDIATE, h2, "x")
        assert a.template_digest == h1.digest()
        assert b.template_digest == h2.digest()
        assert a.template_digest != b.template_digest

    def test_rendering_is_deterministic(self, h3):
        one = render_baseline(PromptKind.BASELINE_PERSISTENT, h3, "same input")
        two = render_baseline(PromptKind.BASELINE_PERSISTENT, h3, "same input")
        assert one.text == two.text


class TestChainSteps:
    def test_clarify_includes_devices_and_verdict_form(self, h1):
        p = render_chain_step(
            PromptKind.CLARIFY, "make it cozy", devices=h1.devices_doc(), home_id="h1"
        )
        assert "RELEVANT: true" in p.text
        assert "RELEVANT: false" in p.text
        assert dump_doc(h1.devices_doc()) in p.text

    def test_filter_devices_keeps_structure_instruction(self, h1):
        p = render_chain_step(
            PromptKind.FILTER_DEVICES, "dim the lights", devices=h1.devices_doc()
        )
        assert "smallest subset" in p.text
        assert "do not move devices between rooms" in p.text

    def test_filter_sensors_uses_sensors_doc(self, h1):
        p = render_chain_step(
            PromptKind.FILTER_SENSORS, "wake me at 7", sensors=h1.sensors_doc()
        )
        assert dump_doc(h1.sensors_doc()) in p.text
        assert "Devices:" not in p.text

    def test_plan_persistent_requires_both_docs(self, h1):
        p = render_chain_step(
            PromptKind.PLAN_PERSISTENT,
            "wake me at 7",
            devices={"bedroom": {"lamp": {"state": "bool"}}},
            sensors=h1.sensors_doc(),
        )
        assert '{"trigger": {}, "action": {}, "explanation": ""}' in p.text

    def test_feedback_revise_embeds_plan_and_critique(self):
        plan_text = json.dumps({"livingroom": {"lamp": {"state": True}}})
        p = render_chain_step(
            PromptKind.FEEDBACK_REVISE,
            "lights please",
            prior_plan=plan_text,
            critique="not the lamp",
        )
        assert plan_text in p.text
        assert "User feedback: not the lamp" in p.text
        assert p.critique == "not the lamp"

    def test_feedback_devices_block_is_optional(self):
        without = render_chain_step(
            PromptKind.FEEDBACK_REVISE, "c", prior_plan="{}", critique="no"
        )
        with_devices = render_chain_step(
            PromptKind.FEEDBACK_REVISE,
            "c",
            prior_plan="{}",
            critique="no",
            devices={"room": {"lamp": {"state": "bool"}}},
        )
        assert "Devices:" not in without.text
        assert "Devices:" in with_devices.text

    def test_classify_goal_verdict_form(self):
        p = render_chain_step(PromptKind.CLASSIFY_GOAL, "I need coffee in the morning")
        assert "GOAL: immediate" in p.text
        assert "GOAL: persistent" in p.text

    def test_context_lines_threaded_through(self, h1):
        p = render_chain_step(
            PromptKind.CLARIFY,
            "do the thing",
            devices=h1.devices_doc(),
            context=("I meant the kitchen", "the bright one"),
        )
        assert "User added: I meant the kitchen" in p.text
        assert "User added: the bright one" in p.text
        assert p.context == ("I meant the kitchen", "the bright one")

    def test_missing_context_errors(self, h1):
        with pytest.raises(MissingContext):
            render_chain_step(PromptKind.CLARIFY, "cmd")
        with pytest.raises(MissingContext):
            render_chain_step(PromptKind.FILTER_SENSORS, "cmd")
        with pytest.raises(MissingContext):
            render_chain_step(
                PromptKind.PLAN_PERSISTENT, "cmd", devices=h1.devices_doc()
            )
        with pytest.raises(MissingContext):
            render_chain_step(PromptKind.FEEDBACK_REVISE, "cmd", prior_plan="{}")

    def test_rejects_baseline_kind_and_few_shot(self, h1):
        with pytest.raises(StyleUnsupported):
            render_chain_step(PromptKind.BASELINE_IMMEDIATE, "cmd")
        with pytest.raises(StyleUnsupported):
            render_chain_step(
                PromptKind.CLARIFY,
                "cmd",
                devices=h1.devices_doc(),
                style=PromptStyle.FEW_SHOT_COMPLETION,
            )


class TestMatchSubject:
    def test_plain_command(self, h1):
        p = render_chain_step(PromptKind.CLARIFY, "warm it up", devices=h1.devices_doc())
        assert p.match_subject() == "warm it up"

    def test_context_and_critique_joined(self):
        p = render_chain_step(
            PromptKind.FEEDBACK_REVISE,
            "warm it up",
            context=("the bedroom",),
            prior_plan="{}",
            critique="too hot",
        )
        assert p.match_subject() == "warm it up :: the bedroom :: too hot"


def test_kind_sets_partition():
    assert BASELINE_KINDS.isdisjoint(CHAIN_KINDS)
    assert BASELINE_KINDS | CHAIN_KINDS == set(PromptKind)


def test_dump_doc_is_sorted_and_indented():
    text = dump_doc({"b": 1, "a": {"z": True}})
    assert text == '{\n    "a": {\n        "z": true\n    },\n    "b": 1\n}'
