"""Benchmark dataset, batch runner, and metric reports."""

from hearth.evaluation.dataset import (
    CommandRecord,
    DatasetCorrupt,
    GoalCategory,
    load_commands,
)
from hearth.evaluation.metrics import (
    RelevanceConfusion,
    TargetingMatrix,
    availability_map,
    load_category_tags,
    relevance_confusion,
    targeting_matrix,
    usage_report,
)
from hearth.evaluation.runner import RunResult, load_critiques, run_matrix
from hearth.evaluation.reports import export_report, rater_tasks

__all__ = [
    "CommandRecord",
    "DatasetCorrupt",
    "GoalCategory",
    "RelevanceConfusion",
    "RunResult",
    "TargetingMatrix",
    "availability_map",
    "export_report",
    "load_category_tags",
    "load_commands",
    "load_critiques",
    "rater_tasks",
    "relevance_confusion",
    "run_matrix",
    "targeting_matrix",
    "usage_report",
]
