"""Aggregate metrics over batch-run results.

Two views matter: device targeting (given that a plan was proposed, did it
touch the right kind of device) and relevance detection (should a plan have
been proposed at all). Both are computed from RunResult rows so they can be
re-derived from an exported report without re-running any model.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from hearth.evaluation.dataset import GoalCategory
from hearth.home import HomeTemplate, device_catalog, fixture_root

logger = logging.getLogger(__name__)

# Column used when a touched device has no tag in the lexicon.
UNKNOWN_TAG = "unknown"
# Column used when one response touches devices with several different tags.
MIXED_TAG = "mixed"

# Wildcard in the category-tag map: any device at all counts as relevant.
ANY_TAG = "*"


def load_category_tags(path: str | Path | None = None) -> dict[GoalCategory, frozenset[str] | None]:
    """Category -> relevant device tags; None means every tag qualifies."""
    source = Path(path) if path is not None else Path(str(fixture_root() / "category_types.json"))
    doc = json.loads(source.read_text())
    out: dict[GoalCategory, frozenset[str] | None] = {}
    for name, tags in doc.items():
        category = GoalCategory(name)
        if ANY_TAG in tags:
            out[category] = None
        else:
            out[category] = frozenset(tags)
    missing = [c.value for c in GoalCategory if c not in out]
    if missing:
        raise ValueError(f"category tag map incomplete, missing {missing}")
    return out


def availability_map(
    templates: dict[str, HomeTemplate],
    lexicon=None,
    category_tags: dict[GoalCategory, frozenset[str] | None] | None = None,
) -> dict[tuple[str, GoalCategory], bool]:
    """Whether each home contains at least one device relevant to each category."""
    tags_by_category = category_tags or load_category_tags()
    out = {}
    for home_id, template in templates.items():
        present = {entry.tag for entry in device_catalog(template, lexicon, strict=False)}
        for category, relevant in tags_by_category.items():
            if relevant is None:
                available = bool(present)
            else:
                available = bool(present & relevant)
            out[(home_id, category)] = available
    return out


@dataclass
class TargetingMatrix:
    """Counts of proposed plans per category, by the device tag they touched."""

    counts: dict[GoalCategory, dict[str, int]]
    responses: dict[GoalCategory, int]
    correct: dict[GoalCategory, int]

    def proportion(self, category: GoalCategory) -> float:
        """Share of responses touching only relevant devices; vacuously 1.0."""
        n = self.responses.get(category, 0)
        if n == 0:
            return 1.0
        return self.correct[category] / n

    def tag_columns(self) -> list[str]:
        names = set()
        for row in self.counts.values():
            names.update(row)
        return sorted(names)

    def to_doc(self) -> dict:
        return {
            "counts": {c.value: dict(sorted(self.counts[c].items())) for c in GoalCategory},
            "responses": {c.value: self.responses[c] for c in GoalCategory},
            "correct": {c.value: self.correct[c] for c in GoalCategory},
            "proportions": {c.value: self.proportion(c) for c in GoalCategory},
        }


def targeting_matrix(results, category_tags=None) -> TargetingMatrix:
    """Tabulate which device tags each category's proposed plans touched.

    A response lands in exactly one column: its single touched tag, MIXED_TAG
    when it touched several, UNKNOWN_TAG when a device had no lexicon tag.
    Row sums therefore equal the number of device-targeting responses.
    """
    tags_by_category = category_tags or load_category_tags()
    counts: dict[GoalCategory, dict[str, int]] = {c: {} for c in GoalCategory}
    responses = {c: 0 for c in GoalCategory}
    correct = {c: 0 for c in GoalCategory}
    for result in results:
        if result.final_plan is None or not result.tags:
            continue
        category = result.record.category
        touched = set(result.tags)
        label = next(iter(touched)) if len(touched) == 1 else MIXED_TAG
        counts[category][label] = counts[category].get(label, 0) + 1
        responses[category] += 1
        relevant = tags_by_category[category]
        if relevant is None:
            ok = UNKNOWN_TAG not in touched
        else:
            ok = touched <= relevant
        if ok:
            correct[category] += 1
    return TargetingMatrix(counts=counts, responses=responses, correct=correct)


@dataclass
class ConfusionCell:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_doc(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


@dataclass
class RelevanceConfusion:
    """Per (home, category) confusion over the propose-or-decline decision."""

    cells: dict[tuple[str, GoalCategory], ConfusionCell] = field(default_factory=dict)

    def cell(self, home_id: str, category: GoalCategory) -> ConfusionCell:
        return self.cells.setdefault((home_id, category), ConfusionCell())

    def total(self) -> int:
        return sum(cell.total() for cell in self.cells.values())

    def false_positives(self, home_id: str, category: GoalCategory) -> int:
        found = self.cells.get((home_id, category))
        return found.fp if found else 0

    def to_doc(self) -> dict:
        rows = {}
        for (home_id, category), cell in sorted(
            self.cells.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
        ):
            rows[f"{home_id}/{category.value}"] = cell.to_doc()
        return {"cells": rows, "total": self.total()}


def relevance_confusion(results, availability, category_tags=None) -> RelevanceConfusion:
    """Score propose-or-decline against what the home actually contains.

    Proposing counts as a true positive only when the plan touched at least
    one device of a relevant tag; proposing anything else where the category
    has no footing is a false positive. Declining is correct exactly when the
    home offers nothing relevant.
    """
    tags_by_category = category_tags or load_category_tags()
    confusion = RelevanceConfusion()
    for result in results:
        category = result.record.category
        cell = confusion.cell(result.home_id, category)
        available = availability[(result.home_id, category)]
        if result.final_plan is not None:
            relevant = tags_by_category[category]
            touched = set(result.tags)
            if relevant is None:
                hit = available and bool(touched - {UNKNOWN_TAG})
            else:
                hit = bool(touched & relevant)
            if hit:
                cell.tp += 1
            else:
                cell.fp += 1
        else:
            if available:
                cell.fn += 1
            else:
                cell.tn += 1
    return confusion


def _stats(values: list[float]) -> dict:
    if not values:
        return {"count": 0, "min": 0.0, "max": 0.0, "mean": 0.0, "total": 0.0}
    total = sum(values)
    return {
        "count": len(values),
        "min": min(values),
        "max": max(values),
        "mean": total / len(values),
        "total": total,
    }


def _usage_group(rows: list) -> dict:
    return {
        "input_tokens": _stats([float(u.input_tokens) for u in rows]),
        "output_tokens": _stats([float(u.output_tokens) for u in rows]),
        "latency_s": _stats([u.latency for u in rows]),
        "estimated_cost": sum(u.estimated_cost for u in rows),
    }


def usage_report(results) -> dict:
    """Token, latency, and cost stats grouped by step, home, and goal type."""
    by_step: dict[str, list] = {}
    by_home: dict[str, list] = {}
    by_goal: dict[str, list] = {}
    everything = []
    for result in results:
        total = result.trace.total_usage()
        by_home.setdefault(result.home_id, []).append(total)
        by_goal.setdefault(result.record.goal.value, []).append(total)
        everything.append(total)
        for step in result.trace.steps:
            by_step.setdefault(step.step, []).append(step.usage)
    return {
        "per_step": {name: _usage_group(rows) for name, rows in sorted(by_step.items())},
        "per_home": {name: _usage_group(rows) for name, rows in sorted(by_home.items())},
        "per_goal": {name: _usage_group(rows) for name, rows in sorted(by_goal.items())},
        "overall": _usage_group(everything),
    }
