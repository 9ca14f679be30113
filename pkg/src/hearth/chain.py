"""Stepwise reasoning chain: clarify, filter, plan, feedback.

Instead of one monolithic prompt, a command walks through small steps that
each do one job. Clarify decides whether the home is relevant at all, filter
narrows the device (and sensor) documents, plan fills in values over the
narrowed subset, and feedback revises a rejected plan once before giving up.
Ablation modes merge or drop steps so the value of each can be measured.

Accepted plans land in a PlanCache keyed by exact normalized command text
plus the template digest; a hit answers without any model call. Rejected
plans go to an append-only BadPlanLog together with the user's critique.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from hashlib import sha256
from pathlib import Path

from .gateway import (
    Backend,
    CancelToken,
    GenerationParams,
    UsageRecord,
    normalize_command,
)
from .home import HomeTemplate, devices_doc_from, sensors_doc_from
from .plans import (
    ActionPlan,
    GoalType,
    ImmediatePlan,
    RoutinePlan,
    ValidityClass,
    extract_json,
    interpret_response,
    parse_plan,
    plan_to_doc,
    serialize_plan,
)
from .prompts import PromptKind, PromptStyle, RenderedPrompt, render_baseline, render_chain_step

logger = logging.getLogger(__name__)

APOLOGY = (
    "I'm sorry, I didn't find anything in the home that seems relevant "
    "to your command. Can you provide more information?"
)
REVISION_APOLOGY = "I'm sorry, I wasn't able to improve the plan. I'll take no action."

_VERDICT_RE = re.compile(r"^\s*RELEVANT:\s*(true|false)\b", re.IGNORECASE | re.MULTILINE)
_GOAL_RE = re.compile(r"^\s*GOAL:\s*(immediate|persistent)\b", re.IGNORECASE | re.MULTILINE)


class ChainError(RuntimeError):
    pass


class SubsetNotInTemplate(ChainError):
    """Filter output invented, relocated, or mistyped template entries."""


class PlanOutsideSubset(ChainError):
    """Plan referenced devices or sensors the filter did not select."""


class ChainMode(str, Enum):
    BASELINE_SINGLE_PROMPT = "baseline_single_prompt"
    COMBINED_CLARIFY_FILTER = "combined_clarify_filter"
    COMBINED_FILTER_PLAN = "combined_filter_plan"
    FULL_SPLIT = "full_split"


class ChainOutcome(str, Enum):
    PLAN_PROPOSED = "plan_proposed"
    NO_RELEVANT_DEVICES = "no_relevant_devices"
    ABANDONED = "abandoned"
    ERROR = "error"


@dataclass
class StepRecord:
    step: str
    prompt_digest: str
    completion_digest: str
    usage: UsageRecord
    result: str
    error: str | None = None


@dataclass
class ChainTrace:
    command: str
    goal: GoalType
    mode: ChainMode
    home_id: str | None
    steps: list[StepRecord] = field(default_factory=list)
    outcome: ChainOutcome = ChainOutcome.ERROR
    plan: ActionPlan | None = None
    validity: ValidityClass | None = None
    utterance: str = ""
    cache_hit: bool = False

    def total_usage(self) -> UsageRecord:
        return UsageRecord(
            input_tokens=sum(s.usage.input_tokens for s in self.steps),
            output_tokens=sum(s.usage.output_tokens for s in self.steps),
            latency=sum(s.usage.latency for s in self.steps),
            estimated_cost=sum(s.usage.estimated_cost for s in self.steps),
        )

    def to_doc(self, template: HomeTemplate | None = None) -> dict:
        return {
            "command": self.command,
            "goal": self.goal.value,
            "mode": self.mode.value,
            "home_id": self.home_id,
            "outcome": self.outcome.value,
            "validity": self.validity.value if self.validity else None,
            "utterance": self.utterance,
            "cache_hit": self.cache_hit,
            "plan": plan_to_doc(template, self.plan)
            if template is not None and self.plan is not None
            else None,
            "steps": [
                {
                    "step": s.step,
                    "prompt_digest": s.prompt_digest,
                    "completion_digest": s.completion_digest,
                    "result": s.result,
                    "error": s.error,
                    "usage": {
                        "input_tokens": s.usage.input_tokens,
                        "output_tokens": s.usage.output_tokens,
                        "latency": s.usage.latency,
                        "estimated_cost": s.usage.estimated_cost,
                    },
                }
                for s in self.steps
            ],
        }


@dataclass
class SessionState:
    """Dialogue state for one interactive session."""

    session_id: str
    home: HomeTemplate
    home_id: str | None = None
    history: list = field(default_factory=list)
    pending_plan: ActionPlan | None = None
    pending_goal: GoalType | None = None
    clarifications: list[str] = field(default_factory=list)

    def reset_episode(self) -> None:
        self.pending_plan = None
        self.pending_goal = None
        self.clarifications = []


# ---------------------------------------------------------------------------
# Plan cache and bad-plan log

CACHE_SCHEMA_VERSION = 1


class PlanCache:
    """Accepted plans by (normalized command, template digest). JSON-backed."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            doc = json.loads(self.path.read_text(encoding="utf-8"))
            if doc.get("schema_version") != CACHE_SCHEMA_VERSION:
                logger.warning("ignoring plan cache with schema %r", doc.get("schema_version"))
            else:
                self._entries = doc.get("entries", {})

    @staticmethod
    def key(command: str, template: HomeTemplate) -> str:
        return f"{normalize_command(command)}@{template.digest()}"

    def lookup(self, command: str, template: HomeTemplate):
        """Return (goal, plan) for an exact hit, revalidating against the template."""
        with self._lock:
            entry = self._entries.get(self.key(command, template))
            if entry is None:
                return None
            goal = GoalType(entry["goal"])
            try:
                plan = parse_plan(template, entry["plan"], goal)
            except Exception:
                # stale or corrupt entry; drop it rather than serve it
                logger.warning("dropping cache entry that no longer validates")
                del self._entries[self.key(command, template)]
                self._save()
                return None
            return goal, plan

    def store(self, command: str, template: HomeTemplate, goal: GoalType, plan: ActionPlan) -> None:
        with self._lock:
            self._entries[self.key(command, template)] = {
                "goal": goal.value,
                "plan": plan_to_doc(template, plan),
                "accepted_at": time.time(),
            }
            self._save()

    def __len__(self) -> int:
        return len(self._entries)

    def _save(self) -> None:
        if self.path is None:
            return
        doc = {"schema_version": CACHE_SCHEMA_VERSION, "entries": self._entries}
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.path)


class BadPlanLog:
    """Append-only log of rejected plans and the critiques that rejected them."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []
        self._lock = threading.Lock()

    def append(self, command: str, home_digest: str, plan_doc: dict, critique: str) -> None:
        record = {
            "ts": time.time(),
            "command": command,
            "home_digest": home_digest,
            "plan": plan_doc,
            "critique": critique,
        }
        with self._lock:
            self.records.append(record)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# The chain itself


@dataclass
class ChainConfig:
    mode: ChainMode = ChainMode.FULL_SPLIT
    params: GenerationParams = field(default_factory=GenerationParams)
    skip_sensor_filter: bool = False
    include_template_in_feedback: bool = True
    max_clarify_rounds: int = 3
    prompt_dump_dir: Path | None = None


def _digest(text: str) -> str:
    return sha256(text.encode()).hexdigest()


class ReasoningChain:
    def __init__(
        self,
        backend: Backend,
        template: HomeTemplate,
        home_id: str | None = None,
        config: ChainConfig | None = None,
        cache: PlanCache | None = None,
        bad_plans: BadPlanLog | None = None,
    ):
        self.backend = backend
        self.template = template
        self.home_id = home_id
        self.config = config or ChainConfig()
        self.cache = cache if cache is not None else PlanCache()
        self.bad_plans = bad_plans if bad_plans is not None else BadPlanLog()
        self._dump_seq = 0

    # -- individual steps ------------------------------------------------------

    def clarify(self, command: str, context=(), cancel=None):
        """Boolean relevance check. Returns (relevant, utterance, step)."""
        prompt, completion = self._ask(
            PromptKind.CLARIFY,
            command,
            devices=self.template.devices_doc(),
            context=context,
            cancel=cancel,
        )
        match = _VERDICT_RE.search(completion.text)
        error = None
        if match is None:
            relevant = False
            error = "UnparseableVerdict: no RELEVANT line in completion"
            logger.warning("clarify verdict missing; treating command as not relevant")
            utterance = APOLOGY
        else:
            relevant = match.group(1).lower() == "true"
            utterance = _VERDICT_RE.sub("", completion.text, count=1).strip()
            if not relevant and not utterance:
                utterance = APOLOGY
        step = StepRecord(
            step=PromptKind.CLARIFY.value,
            prompt_digest=_digest(prompt.text),
            completion_digest=_digest(completion.text),
            usage=completion.usage,
            result=f"relevant={str(relevant).lower()}",
            error=error,
        )
        return relevant, utterance, step

    def classify_goal(self, command: str, cancel=None):
        """Infer immediate vs persistent for interactive use."""
        prompt, completion = self._ask(PromptKind.CLASSIFY_GOAL, command, cancel=cancel)
        match = _GOAL_RE.search(completion.text)
        error = None
        if match is None:
            goal = GoalType.IMMEDIATE
            error = "UnparseableVerdict: no GOAL line in completion"
            logger.warning("goal verdict missing; defaulting to immediate")
        else:
            goal = GoalType(match.group(1).lower())
        step = StepRecord(
            step=PromptKind.CLASSIFY_GOAL.value,
            prompt_digest=_digest(prompt.text),
            completion_digest=_digest(completion.text),
            usage=completion.usage,
            result=f"goal={goal.value}",
            error=error,
        )
        return goal, step

    def filter_devices(self, command: str, context=(), cancel=None):
        """Narrow the device document. Returns (subset or None, steps).

        The subset maps room -> device -> setting -> SettingType. An empty
        subset means the model found nothing relevant.
        """
        return self._filtered_subset(
            PromptKind.FILTER_DEVICES, command, context, cancel, self._check_device_subset
        )

    def filter_sensors(self, command: str, context=(), cancel=None):
        return self._filtered_subset(
            PromptKind.FILTER_SENSORS, command, context, cancel, self._check_sensor_subset
        )

    def _filtered_subset(self, kind, command, context, cancel, checker):
        steps = []
        attempt_context = list(context)
        for attempt in range(2):
            kwargs = (
                {"devices": self.template.devices_doc()}
                if kind is PromptKind.FILTER_DEVICES
                else {"sensors": self.template.sensors_doc()}
            )
            prompt, completion = self._ask(
                kind, command, context=attempt_context, cancel=cancel, **kwargs
            )
            doc = extract_json(completion.text)
            try:
                if doc is None:
                    raise SubsetNotInTemplate("no JSON object in filter response")
                subset = checker(doc)
            except SubsetNotInTemplate as exc:
                steps.append(
                    StepRecord(
                        step=kind.value,
                        prompt_digest=_digest(prompt.text),
                        completion_digest=_digest(completion.text),
                        usage=completion.usage,
                        result="invalid subset",
                        error=str(exc),
                    )
                )
                if attempt == 0:
                    attempt_context = list(attempt_context) + [
                        f"Your previous response was invalid: {exc}. "
                        "Respond again with a subset of the document above."
                    ]
                    continue
                return None, steps
            size = sum(len(v) for v in subset.values())
            steps.append(
                StepRecord(
                    step=kind.value,
                    prompt_digest=_digest(prompt.text),
                    completion_digest=_digest(completion.text),
                    usage=completion.usage,
                    result=f"subset size={size}",
                )
            )
            return subset, steps
        raise AssertionError("unreachable")

    def plan(
        self,
        command: str,
        goal: GoalType,
        device_subset,
        sensor_subset=None,
        context=(),
        cancel=None,
    ):
        """Fill in concrete values over the filtered subset.

        Returns (plan or None, validity, steps). The plan must stay inside
        the subset it was given; one retry echoes the violation back.
        """
        steps = []
        attempt_context = list(context)
        kind = (
            PromptKind.PLAN_IMMEDIATE
            if goal is GoalType.IMMEDIATE
            else PromptKind.PLAN_PERSISTENT
        )
        devices_doc = devices_doc_from(device_subset)
        sensors_doc = None
        if goal is GoalType.PERSISTENT:
            sensors_doc = (
                sensors_doc_from(sensor_subset)
                if sensor_subset is not None
                else self.template.sensors_doc()
            )
        validity = None
        for attempt in range(2):
            prompt, completion = self._ask(
                kind,
                command,
                devices=devices_doc,
                sensors=sensors_doc,
                context=attempt_context,
                cancel=cancel,
            )
            interpreted = interpret_response(self.template, completion.text, goal)
            validity = interpreted.validity
            problem = None
            if interpreted.plan is None:
                problem = interpreted.error or f"response was {validity.value}"
            else:
                problem = self._outside_subset(
                    interpreted.plan, device_subset, sensor_subset
                )
            if problem is None:
                steps.append(
                    StepRecord(
                        step=kind.value,
                        prompt_digest=_digest(prompt.text),
                        completion_digest=_digest(completion.text),
                        usage=completion.usage,
                        result=f"validity={validity.value}",
                    )
                )
                return interpreted.plan, validity, steps
            steps.append(
                StepRecord(
                    step=kind.value,
                    prompt_digest=_digest(prompt.text),
                    completion_digest=_digest(completion.text),
                    usage=completion.usage,
                    result=f"validity={validity.value}",
                    error=problem,
                )
            )
            if attempt == 0:
                attempt_context = list(attempt_context) + [
                    f"Your previous response was invalid: {problem}. "
                    "Respond again following the required structure."
                ]
        return None, validity, steps

    def revise(self, command: str, plan: ActionPlan, goal: GoalType, critique: str, cancel=None):
        """One revision pass after a critique. Returns (plan or None, utterance, steps).

        The rejected plan is logged first. A revision that fails validation,
        or that comes back unchanged, ends in an apology.
        """
        plan_doc = plan_to_doc(self.template, plan)
        self.bad_plans.append(command, self.template.digest(), plan_doc, critique)
        steps = []
        prior_text = json.dumps(plan_doc, indent=4, sort_keys=True)
        devices = (
            self.template.devices_doc()
            if self.config.include_template_in_feedback
            else None
        )
        critique_text = critique
        for attempt in range(2):
            prompt, completion = self._ask(
                PromptKind.FEEDBACK_REVISE,
                command,
                devices=devices,
                prior_plan=prior_text,
                critique=critique_text,
                cancel=cancel,
            )
            interpreted = interpret_response(self.template, completion.text, goal)
            record = StepRecord(
                step=PromptKind.FEEDBACK_REVISE.value,
                prompt_digest=_digest(prompt.text),
                completion_digest=_digest(completion.text),
                usage=completion.usage,
                result=f"validity={interpreted.validity.value}",
            )
            steps.append(record)
            if interpreted.plan is not None:
                if serialize_plan(self.template, interpreted.plan) == serialize_plan(
                    self.template, plan
                ):
                    record.error = "revision identical to rejected plan"
                    return None, REVISION_APOLOGY, steps
                utterance = interpreted.plan.explanation or "Here's a revised plan."
                return interpreted.plan, utterance, steps
            record.error = interpreted.error or f"response was {interpreted.validity.value}"
            if attempt == 0:
                critique_text = (
                    f"{critique} (Your previous revision was invalid: {record.error}. "
                    "Respond again following the required structure.)"
                )
        return None, REVISION_APOLOGY, steps

    def accept(self, command: str, plan: ActionPlan, goal: GoalType) -> None:
        """Record user acceptance: the plan becomes a cache hit for next time."""
        self.cache.store(command, self.template, goal, plan)

    # -- the full pipeline -----------------------------------------------------

    def run_chain(
        self,
        command: str,
        goal: GoalType,
        mode: ChainMode | None = None,
        context=(),
        cancel: CancelToken | None = None,
    ) -> ChainTrace:
        mode = mode or self.config.mode
        trace = ChainTrace(command=command, goal=goal, mode=mode, home_id=self.home_id)

        cached = self.cache.lookup(command, self.template)
        if cached is not None and cached[0] is goal:
            trace.steps.append(
                StepRecord(
                    step="cache_lookup",
                    prompt_digest="",
                    completion_digest="",
                    usage=UsageRecord(0, 0, 0.0, 0.0),
                    result="hit",
                )
            )
            trace.outcome = ChainOutcome.PLAN_PROPOSED
            trace.plan = cached[1]
            trace.validity = ValidityClass.VALID
            trace.cache_hit = True
            trace.utterance = cached[1].explanation or "Reusing a plan you already approved."
            return trace

        try:
            if mode is ChainMode.BASELINE_SINGLE_PROMPT:
                self._run_baseline(trace, command, goal, cancel)
            else:
                self._run_stepwise(trace, command, goal, mode, context, cancel)
        except ChainError as exc:
            trace.outcome = ChainOutcome.ERROR
            trace.utterance = str(exc)
        return trace

    def _run_baseline(self, trace, command, goal, cancel):
        kind = (
            PromptKind.BASELINE_IMMEDIATE
            if goal is GoalType.IMMEDIATE
            else PromptKind.BASELINE_PERSISTENT
        )
        prompt = render_baseline(
            kind, self.template, command, PromptStyle.ZERO_SHOT_INSTRUCTION, self.home_id
        )
        self._dump(prompt)
        completion = self.backend.complete(prompt, self.config.params, cancel)
        interpreted = interpret_response(self.template, completion.text, goal)
        trace.validity = interpreted.validity
        trace.steps.append(
            StepRecord(
                step=kind.value,
                prompt_digest=_digest(prompt.text),
                completion_digest=_digest(completion.text),
                usage=completion.usage,
                result=f"validity={interpreted.validity.value}",
                error=interpreted.error,
            )
        )
        if interpreted.plan is not None:
            trace.outcome = ChainOutcome.PLAN_PROPOSED
            trace.plan = interpreted.plan
            trace.utterance = interpreted.plan.explanation
        else:
            trace.outcome = ChainOutcome.ERROR
            trace.utterance = interpreted.error or "The response could not be used."

    def _run_stepwise(self, trace, command, goal, mode, context, cancel):
        if mode in (ChainMode.FULL_SPLIT, ChainMode.COMBINED_FILTER_PLAN):
            relevant, utterance, step = self.clarify(command, context, cancel)
            trace.steps.append(step)
            if not relevant:
                trace.outcome = ChainOutcome.NO_RELEVANT_DEVICES
                trace.utterance = utterance
                return

        if mode is ChainMode.COMBINED_FILTER_PLAN:
            device_subset = dict(self.template.devices)
        else:
            subset, steps = self.filter_devices(command, context, cancel)
            trace.steps.extend(steps)
            if subset is None:
                trace.outcome = ChainOutcome.ERROR
                trace.utterance = steps[-1].error or "Device filtering failed."
                return
            if not subset:
                trace.outcome = ChainOutcome.NO_RELEVANT_DEVICES
                trace.utterance = APOLOGY
                return
            device_subset = subset

        sensor_subset = None
        if (
            goal is GoalType.PERSISTENT
            and mode is not ChainMode.COMBINED_FILTER_PLAN
            and not self.config.skip_sensor_filter
        ):
            sensor_subset, steps = self.filter_sensors(command, context, cancel)
            trace.steps.extend(steps)
            if sensor_subset is None:
                trace.outcome = ChainOutcome.ERROR
                trace.utterance = steps[-1].error or "Sensor filtering failed."
                return

        plan, validity, steps = self.plan(
            command, goal, device_subset, sensor_subset, context, cancel
        )
        trace.steps.extend(steps)
        trace.validity = validity
        if plan is None:
            trace.outcome = ChainOutcome.ERROR
            trace.utterance = steps[-1].error or "Planning failed."
            return
        trace.outcome = ChainOutcome.PLAN_PROPOSED
        trace.plan = plan
        trace.utterance = plan.explanation or "Here's what I propose."

    # -- helpers ---------------------------------------------------------------

    def _ask(self, kind, command, cancel=None, **render_kwargs):
        prompt = render_chain_step(
            kind,
            command,
            digest=self.template.digest(),
            home_id=self.home_id,
            **render_kwargs,
        )
        self._dump(prompt)
        completion = self.backend.complete(prompt, self.config.params, cancel)
        return prompt, completion

    def _dump(self, prompt: RenderedPrompt) -> None:
        if self.config.prompt_dump_dir is None:
            return
        self.config.prompt_dump_dir.mkdir(parents=True, exist_ok=True)
        path = self.config.prompt_dump_dir / f"{self._dump_seq:03d}_{prompt.kind.value}.txt"
        path.write_text(prompt.text, encoding="utf-8")
        self._dump_seq += 1

    def _check_device_subset(self, doc) -> dict:
        if not isinstance(doc, dict):
            raise SubsetNotInTemplate("filter output must be a JSON object")
        subset: dict = {}
        for room, room_doc in doc.items():
            if room == "explanation":
                continue
            if room not in self.template.devices:
                raise SubsetNotInTemplate(f"unknown room {room!r} in filter output")
            if not isinstance(room_doc, dict):
                raise SubsetNotInTemplate(f"room {room!r} must map devices to settings")
            for device, settings in room_doc.items():
                template_settings = self.template.devices[room].get(device)
                if template_settings is None:
                    raise SubsetNotInTemplate(
                        f"device {room}/{device} is not in the home"
                    )
                if isinstance(settings, dict) and settings:
                    chosen = {}
                    for name in settings:
                        if name not in template_settings:
                            raise SubsetNotInTemplate(
                                f"setting {room}/{device}/{name} is not in the home"
                            )
                        chosen[name] = template_settings[name]
                else:
                    chosen = dict(template_settings)
                subset.setdefault(room, {})[device] = chosen
        return subset

    def _check_sensor_subset(self, doc) -> dict:
        if not isinstance(doc, dict):
            raise SubsetNotInTemplate("filter output must be a JSON object")
        subset: dict = {}
        for scope, scope_doc in doc.items():
            if scope == "explanation":
                continue
            if scope not in self.template.sensors:
                raise SubsetNotInTemplate(f"unknown sensor scope {scope!r}")
            if not isinstance(scope_doc, dict):
                raise SubsetNotInTemplate(f"scope {scope!r} must map sensors to types")
            for name in scope_doc:
                if name not in self.template.sensors[scope]:
                    raise SubsetNotInTemplate(f"sensor {scope}/{name} is not in the home")
                subset.setdefault(scope, {})[name] = self.template.sensors[scope][name]
        return subset

    def _outside_subset(self, plan: ActionPlan, device_subset, sensor_subset):
        assignments = (
            plan.assignments if isinstance(plan, ImmediatePlan) else plan.action
        )
        for room, devices in assignments.items():
            for device, settings in devices.items():
                if room not in device_subset or device not in device_subset[room]:
                    return f"plan touches {room}/{device} outside the filtered subset"
                for setting in settings:
                    if setting not in device_subset[room][device]:
                        return (
                            f"plan sets {room}/{device}/{setting} "
                            "outside the filtered subset"
                        )
        if isinstance(plan, RoutinePlan) and sensor_subset is not None:
            for scope, names in plan.trigger.items():
                for name in names:
                    if scope not in sensor_subset or name not in sensor_subset[scope]:
                        return (
                            f"trigger uses {scope}/{name} outside the filtered sensors"
                        )
        return None
