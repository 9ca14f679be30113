"""Batch execution of the reasoning chain over the command set.

One cell = (home, command). Cells never abort the matrix: backend failures
and template problems are captured on the result row and scored as declines.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from hearth.chain import ChainConfig, ChainMode, ChainOutcome, ChainTrace, ReasoningChain
from hearth.evaluation.dataset import CommandRecord
from hearth.evaluation.metrics import UNKNOWN_TAG
from hearth.gateway import Backend, GenerationParams
from hearth.home import BuiltinHome, HomeTemplate, device_tag, load_home, load_lexicon
from hearth.plans import ActionPlan, PlanDiff, ValidityClass, diff_plan, plan_to_doc

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    """Everything observed for one (home, command) cell."""

    home_id: str
    record: CommandRecord
    mode: ChainMode
    model: str
    trace: ChainTrace
    final_plan: ActionPlan | None = None
    validity: ValidityClass | None = None
    diff: PlanDiff | None = None
    tags: tuple[str, ...] = ()
    critique: str | None = None
    revised: bool = False
    error: str | None = None

    def to_doc(self, template: HomeTemplate | None = None) -> dict:
        return {
            "home_id": self.home_id,
            "command": self.record.text,
            "category": self.record.category.value,
            "goal": self.record.goal.value,
            "mode": self.mode.value,
            "model": self.model,
            "outcome": self.trace.outcome.value,
            "validity": self.validity.value if self.validity else None,
            "tags": list(self.tags),
            "critique": self.critique,
            "revised": self.revised,
            "error": self.error,
            "plan": plan_to_doc(template, self.final_plan)
            if template is not None and self.final_plan is not None
            else None,
            "trace": self.trace.to_doc(template),
        }


def load_critiques(path: str | Path) -> list[dict]:
    """Read the critique fixture: which cells get a feedback round, and what is said."""
    doc = json.loads(Path(path).read_text())
    rows = doc.get("critiques", doc) if isinstance(doc, dict) else doc
    if not isinstance(rows, list):
        raise ValueError("critique fixture must hold a list of rows")
    out = []
    for row in rows:
        if not isinstance(row, dict) or "command" not in row or "critique" not in row:
            raise ValueError(f"bad critique row: {row!r}")
        out.append({"home": row.get("home"), "command": row["command"], "critique": row["critique"]})
    return out


def _critique_for(critiques, home_id: str, command: str) -> str | None:
    for row in critiques:
        if row["command"] != command:
            continue
        if row["home"] is not None and row["home"] != home_id:
            continue
        return row["critique"]
    return None


def _resolve_homes(homes) -> dict[str, HomeTemplate]:
    if isinstance(homes, dict):
        return dict(homes)
    resolved = {}
    for item in homes:
        home_id = item.value if isinstance(item, BuiltinHome) else str(item)
        resolved[home_id] = load_home(home_id)
    return resolved


def _tags_for(diff: PlanDiff, lexicon) -> tuple[str, ...]:
    tags = set()
    for change in diff.changes:
        tags.add(device_tag(change.device, lexicon) or UNKNOWN_TAG)
    return tuple(sorted(tags))


def run_matrix(
    homes,
    commands: list[CommandRecord],
    backend: Backend,
    *,
    mode: ChainMode = ChainMode.FULL_SPLIT,
    params: GenerationParams | None = None,
    critiques: list[dict] | None = None,
    lexicon=None,
    config: ChainConfig | None = None,
) -> list[RunResult]:
    """Run every command against every home, in order, never aborting a cell."""
    templates = _resolve_homes(homes)
    params = params or GenerationParams()
    lexicon = lexicon or load_lexicon()
    critiques = critiques or []
    results = []
    for home_id, template in templates.items():
        chain_config = config or ChainConfig(mode=mode, params=params)
        chain = ReasoningChain(backend, template, home_id=home_id, config=chain_config)
        for record in commands:
            results.append(
                _run_cell(chain, template, home_id, record, mode, params, critiques, lexicon)
            )
    return results


def _run_cell(chain, template, home_id, record, mode, params, critiques, lexicon) -> RunResult:
    result = RunResult(
        home_id=home_id,
        record=record,
        mode=mode,
        model=params.model_name,
        trace=ChainTrace(command=record.text, goal=record.goal, mode=mode, home_id=home_id),
    )
    try:
        trace = chain.run_chain(record.text, record.goal, mode=mode)
        result.trace = trace
        result.validity = trace.validity
        plan = trace.plan
        if trace.outcome is ChainOutcome.PLAN_PROPOSED and plan is not None:
            critique = _critique_for(critiques, home_id, record.text)
            if critique is not None:
                result.critique = critique
                revised, _utterance, steps = chain.revise(record.text, plan, record.goal, critique)
                trace.steps.extend(steps)
                if revised is not None:
                    plan = revised
                    result.revised = True
                else:
                    plan = None
        if plan is not None:
            result.final_plan = plan
            result.diff = diff_plan(template, plan)
            result.tags = _tags_for(result.diff, lexicon)
    except Exception as exc:
        logger.warning("cell (%s, %r) failed: %s", home_id, record.text, exc)
        result.error = f"{type(exc).__name__}: {exc}"
        result.final_plan = None
        result.tags = ()
    return result
