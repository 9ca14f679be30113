"""Prompt rendering for baseline runs and the stepwise reasoning chain.

Every prompt the system ever sends is rendered here from versioned template
files (templates/*.txt, plain text with $placeholders). Rendering is pure:
same inputs, same bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from string import Template
from typing import Sequence

PROMPT_VERSION = 1


class PromptStyle(str, Enum):
    ZERO_SHOT_INSTRUCTION = "zero_shot_instruction"
    FEW_SHOT_COMPLETION = "few_shot_completion"


class PromptKind(str, Enum):
    BASELINE_IMMEDIATE = "baseline_immediate"
    BASELINE_PERSISTENT = "baseline_persistent"
    CLARIFY = "clarify"
    FILTER_DEVICES = "filter_devices"
    FILTER_SENSORS = "filter_sensors"
    PLAN_IMMEDIATE = "plan_immediate"
    PLAN_PERSISTENT = "plan_persistent"
    FEEDBACK_REVISE = "feedback_revise"
    CLASSIFY_GOAL = "classify_goal"


BASELINE_KINDS = {PromptKind.BASELINE_IMMEDIATE, PromptKind.BASELINE_PERSISTENT}
CHAIN_KINDS = {
    PromptKind.CLARIFY,
    PromptKind.FILTER_DEVICES,
    PromptKind.FILTER_SENSORS,
    PromptKind.PLAN_IMMEDIATE,
    PromptKind.PLAN_PERSISTENT,
    PromptKind.FEEDBACK_REVISE,
    PromptKind.CLASSIFY_GOAL,
}


class StyleUnsupported(ValueError):
    """The requested kind/style combination has no template."""


class MissingContext(ValueError):
    """A required rendering input (devices, sensors, plan, critique) is absent."""


@dataclass(frozen=True)
class RenderedPrompt:
    """One prompt ready to send, with enough metadata to match fixtures."""

    kind: PromptKind
    text: str
    style: PromptStyle
    template_digest: str
    command: str
    context: tuple[str, ...] = ()
    critique: str | None = None
    home_id: str | None = None

    def match_subject(self) -> str:
        """Stable string a scripted backend can match rules against."""
        parts = [self.command, *self.context]
        if self.critique is not None:
            parts.append(self.critique)
        return " :: ".join(parts)


def dump_doc(doc) -> str:
    """Render a JSON document the way prompts embed it."""
    return json.dumps(doc, indent=4, sort_keys=True)


@lru_cache(maxsize=None)
def _template(name: str) -> Template:
    text = (resources.files(__name__) / "templates" / f"{name}.txt").read_text(
        encoding="utf-8"
    )
    return Template(text)


def _context_block(context: Sequence[str]) -> str:
    return "\n".join("User added: " + line for line in context)


def render_baseline(
    kind: PromptKind,
    template,
    command: str,
    style: PromptStyle = PromptStyle.ZERO_SHOT_INSTRUCTION,
    home_id: str | None = None,
) -> RenderedPrompt:
    """Render a single-prompt baseline for the whole home."""
    if kind not in BASELINE_KINDS:
        raise StyleUnsupported(f"{kind.value} is not a baseline prompt kind")
    if not command:
        raise ValueError("command must be non-empty")
    suffix = (
        "zero_shot" if style is PromptStyle.ZERO_SHOT_INSTRUCTION else "few_shot"
    )
    fields = {
        "command": command,
        "devices": dump_doc(template.devices_doc()),
    }
    if kind is PromptKind.BASELINE_PERSISTENT:
        fields["sensors"] = dump_doc(template.sensors_doc())
    text = _template(f"{kind.value}_{suffix}").substitute(fields)
    return RenderedPrompt(
        kind=kind,
        text=text,
        style=style,
        template_digest=template.digest(),
        command=command,
        home_id=home_id,
    )


def render_chain_step(
    kind: PromptKind,
    command: str,
    *,
    devices: dict | None = None,
    sensors: dict | None = None,
    context: Sequence[str] = (),
    prior_plan: str | None = None,
    critique: str | None = None,
    digest: str = "",
    home_id: str | None = None,
    style: PromptStyle = PromptStyle.ZERO_SHOT_INSTRUCTION,
) -> RenderedPrompt:
    """Render one step of the reasoning chain.

    devices/sensors are plain template documents (full or filtered subsets).
    context carries prior clarification turns, newest last.
    """
    if kind not in CHAIN_KINDS:
        raise StyleUnsupported(f"{kind.value} is not a chain-step prompt kind")
    if style is not PromptStyle.ZERO_SHOT_INSTRUCTION:
        raise StyleUnsupported("chain steps are instruction prompts only")
    if not command:
        raise ValueError("command must be non-empty")

    fields = {"command": command, "context": _context_block(context)}
    if kind in (PromptKind.CLARIFY, PromptKind.FILTER_DEVICES, PromptKind.PLAN_IMMEDIATE):
        if devices is None:
            raise MissingContext(f"{kind.value} requires a devices document")
        fields["devices"] = dump_doc(devices)
    elif kind is PromptKind.FILTER_SENSORS:
        if sensors is None:
            raise MissingContext("filter_sensors requires a sensors document")
        fields["sensors"] = dump_doc(sensors)
    elif kind is PromptKind.PLAN_PERSISTENT:
        if devices is None or sensors is None:
            raise MissingContext("plan_persistent requires devices and sensors")
        fields["devices"] = dump_doc(devices)
        fields["sensors"] = dump_doc(sensors)
    elif kind is PromptKind.FEEDBACK_REVISE:
        if prior_plan is None or critique is None:
            raise MissingContext("feedback_revise requires a prior plan and a critique")
        fields["plan"] = prior_plan
        fields["critique"] = critique
        fields["devices_block"] = (
            "\nDevices:\n\n" + dump_doc(devices) + "\n" if devices is not None else ""
        )

    text = _template(kind.value).substitute(fields)
    return RenderedPrompt(
        kind=kind,
        text=text,
        style=style,
        template_digest=digest,
        command=command,
        context=tuple(context),
        critique=critique if kind is PromptKind.FEEDBACK_REVISE else None,
        home_id=home_id,
    )
