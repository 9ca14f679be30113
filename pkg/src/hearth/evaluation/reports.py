"""Deterministic report files for a batch run.

Exports are byte-stable: the same results always serialize to the same
bytes, so re-running an export over unchanged inputs is a no-op diff. No
timestamps, no environment details, fixed column and key order.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from pathlib import Path

from hearth.evaluation.dataset import GoalCategory
from hearth.evaluation.metrics import (
    RelevanceConfusion,
    TargetingMatrix,
    relevance_confusion,
    targeting_matrix,
    usage_report,
)

logger = logging.getLogger(__name__)

REPORT_SCHEMA = 1
_CSV_HEADER = f"# report-schema: {REPORT_SCHEMA}\n"


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(_CSV_HEADER)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def targeting_csv(matrix: TargetingMatrix) -> str:
    """Categories as rows, touched-tag columns, then the correctness summary."""
    tags = matrix.tag_columns()
    header = ["category", *tags, "responses", "correct", "proportion"]
    rows = []
    for category in GoalCategory:
        counts = matrix.counts.get(category, {})
        rows.append(
            [
                category.value,
                *[counts.get(tag, 0) for tag in tags],
                matrix.responses.get(category, 0),
                matrix.correct.get(category, 0),
                matrix.proportion(category),
            ]
        )
    return _csv_text(header, rows)


def relevance_csv(confusion: RelevanceConfusion) -> str:
    header = ["home", "category", "tp", "fp", "tn", "fn"]
    rows = []
    for (home_id, category), cell in sorted(
        confusion.cells.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
    ):
        rows.append([home_id, category.value, cell.tp, cell.fp, cell.tn, cell.fn])
    return _csv_text(header, rows)


def rater_tasks(results) -> list[dict]:
    """Annotation rows for human raters: one per proposed plan."""
    tasks = []
    for result in results:
        if result.final_plan is None:
            continue
        tasks.append(
            {
                "home": result.home_id,
                "command": result.record.text,
                "explanation": result.final_plan.explanation,
            }
        )
    return tasks


def rater_tasks_csv(results) -> str:
    header = ["home", "command", "explanation"]
    rows = [[t["home"], t["command"], t["explanation"]] for t in rater_tasks(results)]
    return _csv_text(header, rows)


def _validity_histogram(results) -> dict:
    counts: dict[str, int] = {}
    for result in results:
        key = result.validity.value if result.validity else "none"
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))


def export_report(
    results,
    out_dir: str | Path,
    *,
    templates=None,
    availability=None,
    category_tags=None,
    meta: dict | None = None,
) -> list[Path]:
    """Write the full report set under out_dir and return the written paths.

    Empty result lists still produce every file, headers intact.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    matrix = targeting_matrix(results, category_tags=category_tags)
    confusion = (
        relevance_confusion(results, availability, category_tags=category_tags)
        if availability is not None
        else None
    )

    def template_for(result):
        if templates is None:
            return None
        return templates.get(result.home_id)

    results_doc = {
        "schema_version": REPORT_SCHEMA,
        "meta": dict(sorted((meta or {}).items())),
        "count": len(results),
        "validity": _validity_histogram(results),
        "results": [r.to_doc(template_for(r)) for r in results],
    }

    files = {
        "results.json": _dump_json(results_doc),
        "targeting.csv": targeting_csv(matrix),
        "targeting.json": _dump_json(
            {"schema_version": REPORT_SCHEMA, "targeting": matrix.to_doc()}
        ),
        "usage.json": _dump_json(
            {"schema_version": REPORT_SCHEMA, "usage": usage_report(results)}
        ),
        "rater_tasks.csv": rater_tasks_csv(results),
    }
    if confusion is not None:
        files["relevance.csv"] = relevance_csv(confusion)
        files["relevance.json"] = _dump_json(
            {"schema_version": REPORT_SCHEMA, "relevance": confusion.to_doc()}
        )

    written = []
    for name in sorted(files):
        path = out / name
        path.write_text(files[name])
        written.append(path)
    logger.info("report exported to %s (%d files)", out, len(written))
    return written
