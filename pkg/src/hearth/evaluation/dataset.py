"""Benchmark command set: 40 natural-language goals across seven categories.

Each record pairs a deliberately vague user command with the trigger-action
routine a conventional rule marketplace would offer for the same goal, which
is what the naive-mimic baseline parrots.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from hearth.plans import GoalType


class DatasetCorrupt(ValueError):
    """The command set on disk does not match its published shape."""


class GoalCategory(str, Enum):
    TEMPERATURE = "Temperature"
    LIGHTING = "Lighting"
    SECURITY = "Security"
    ENERGY_SAVING = "EnergySaving"
    MOOD = "Mood"
    ROBOT_CONTROL = "RobotControl"
    OTHER_APPLIANCES = "OtherAppliances"


# Frozen along with the dataset file; load_commands enforces them.
EXPECTED_TOTAL = 40
EXPECTED_CATEGORY_COUNTS = {
    GoalCategory.TEMPERATURE: 6,
    GoalCategory.LIGHTING: 6,
    GoalCategory.SECURITY: 6,
    GoalCategory.ENERGY_SAVING: 4,
    GoalCategory.MOOD: 6,
    GoalCategory.ROBOT_CONTROL: 6,
    GoalCategory.OTHER_APPLIANCES: 6,
}
EXPECTED_GOAL_COUNTS = {GoalType.IMMEDIATE: 18, GoalType.PERSISTENT: 22}


@dataclass(frozen=True)
class CommandRecord:
    text: str
    category: GoalCategory
    goal: GoalType
    example_routine: str = ""


def _dataset_path() -> Path:
    from hearth.home import fixture_root

    return Path(str(fixture_root() / "commands.json"))


def load_commands(path: str | Path | None = None) -> list[CommandRecord]:
    """Load and validate the command set; raise DatasetCorrupt on any drift."""
    source = Path(path) if path is not None else _dataset_path()
    try:
        doc = json.loads(source.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DatasetCorrupt(f"cannot read command set: {exc}") from exc

    rows = doc.get("records") if isinstance(doc, dict) else doc
    if not isinstance(rows, list):
        raise DatasetCorrupt("command set must be a list of records")

    records = []
    seen = set()
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise DatasetCorrupt(f"record {i} is not an object")
        try:
            text = row["command"]
            category = GoalCategory(row["category"])
            goal = GoalType(row["goal_type"])
        except KeyError as exc:
            raise DatasetCorrupt(f"record {i} missing field {exc}") from exc
        except ValueError as exc:
            raise DatasetCorrupt(f"record {i}: {exc}") from exc
        if not isinstance(text, str) or not text.strip():
            raise DatasetCorrupt(f"record {i} has an empty command")
        if text in seen:
            raise DatasetCorrupt(f"duplicate command: {text!r}")
        seen.add(text)
        example = row.get("example_routine", "")
        if not isinstance(example, str):
            raise DatasetCorrupt(f"record {i} example_routine must be a string")
        records.append(
            CommandRecord(text=text, category=category, goal=goal, example_routine=example)
        )

    if len(records) != EXPECTED_TOTAL:
        raise DatasetCorrupt(f"expected {EXPECTED_TOTAL} commands, found {len(records)}")

    by_category: dict[GoalCategory, int] = {c: 0 for c in GoalCategory}
    by_goal = {g: 0 for g in GoalType}
    for record in records:
        by_category[record.category] += 1
        by_goal[record.goal] += 1
        if record.category is GoalCategory.ENERGY_SAVING and record.goal is not GoalType.PERSISTENT:
            raise DatasetCorrupt(f"energy-saving goals are persistent: {record.text!r}")
    if by_category != EXPECTED_CATEGORY_COUNTS:
        raise DatasetCorrupt(f"category counts drifted: { {c.value: n for c, n in by_category.items()} }")
    if by_goal != EXPECTED_GOAL_COUNTS:
        raise DatasetCorrupt(f"goal-type counts drifted: { {g.value: n for g, n in by_goal.items()} }")
    return records
