"""Command-line entry points: batch evaluation and the HTTP server."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from hearth.chain import ChainConfig, ChainMode
from hearth.evaluation import (
    availability_map,
    export_report,
    load_commands,
    load_critiques,
    relevance_confusion,
    run_matrix,
    targeting_matrix,
)
from hearth.evaluation.dataset import GoalCategory
from hearth.gateway import (
    FixtureRule,
    GenerationParams,
    ScriptedBackend,
    load_http_backend,
)
from hearth.home import fixture_root, load_home

logger = logging.getLogger(__name__)


def _scripted_rules(path: Path) -> ScriptedBackend:
    """A fixture file, or a directory whose *.json files are concatenated."""
    if not path.is_dir():
        return ScriptedBackend.from_file(path)
    files = sorted(path.glob("*.json"))
    if not files:
        raise SystemExit(f"no fixture files under {path}")
    rules = []
    strict = True
    for file in files:
        doc = json.loads(file.read_text())
        strict = strict and doc.get("strict", True)
        for row in doc.get("rules", []):
            response = row["response"]
            if not isinstance(response, str):
                response = json.dumps(response)
            rules.append(
                FixtureRule(
                    response=response,
                    kind=row.get("kind"),
                    home=row.get("home"),
                    command=row.get("command"),
                )
            )
    return ScriptedBackend(rules, strict=strict)


def _build_backend(args):
    if args.backend == "scripted":
        fixtures = Path(args.fixtures) if args.fixtures else Path(
            str(fixture_root() / "llm" / "naive_mimic.json")
        )
        return _scripted_rules(fixtures)
    if args.backend == "http":
        if not args.backend_config:
            raise SystemExit("--backend http requires --backend-config <file>")
        return load_http_backend(args.backend_config)
    raise SystemExit(f"unknown backend {args.backend!r}")


def _cmd_eval_run(args) -> int:
    backend = _build_backend(args)
    mode = ChainMode(args.mode)
    home_ids = [h.strip() for h in args.homes.split(",") if h.strip()]
    templates = {home_id: load_home(home_id) for home_id in home_ids}
    records = load_commands(args.dataset)
    critiques = load_critiques(args.critiques) if args.critiques else None
    params = GenerationParams(model_name=args.model)
    config = None
    if args.dump_prompts:
        config = ChainConfig(mode=mode, params=params, prompt_dump_dir=args.dump_prompts)

    results = run_matrix(
        templates,
        records,
        backend,
        mode=mode,
        params=params,
        critiques=critiques,
        config=config,
    )

    availability = availability_map(templates)
    matrix = targeting_matrix(results)
    confusion = relevance_confusion(results, availability)

    print(f"ran {len(results)} cells ({len(templates)} homes x {len(records)} commands)")
    errors = [r for r in results if r.error]
    if errors:
        print(f"{len(errors)} cells recorded errors")
    for category in GoalCategory:
        print(
            f"  {category.value:16s} responses={matrix.responses[category]:3d} "
            f"correct={matrix.correct[category]:3d} "
            f"proportion={matrix.proportion(category):.2f}"
        )
    totals = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
    for cell in confusion.cells.values():
        totals["tp"] += cell.tp
        totals["fp"] += cell.fp
        totals["tn"] += cell.tn
        totals["fn"] += cell.fn
    print(f"relevance: {totals}")

    if args.report_out:
        meta = {
            "mode": mode.value,
            "homes": ",".join(home_ids),
            "model": args.model,
            "backend": args.backend,
        }
        written = export_report(
            results,
            args.report_out,
            templates=templates,
            availability=availability,
            meta=meta,
        )
        print(f"report: {len(written)} files under {args.report_out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from hearth.service import create_app

    backend = _build_backend(args)
    app = create_app(
        backend,
        params=GenerationParams(model_name=args.model),
        mode=ChainMode(args.mode),
        default_home=args.home,
        reports_root=args.reports_root,
        static_root=args.static_root,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _add_backend_flags(parser) -> None:
    parser.add_argument("--backend", default="scripted", choices=["scripted", "http"])
    parser.add_argument("--fixtures", help="scripted fixture file or directory")
    parser.add_argument("--backend-config", help="JSON config for the http backend")
    parser.add_argument("--model", default="scripted", help="model name recorded in results")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hearth")
    sub = parser.add_subparsers(dest="command", required=True)

    eval_parser = sub.add_parser("eval", help="batch evaluation")
    eval_sub = eval_parser.add_subparsers(dest="eval_command", required=True)
    run = eval_sub.add_parser("run", help="run the command matrix")
    run.add_argument("--homes", default="h1,h2,h3")
    run.add_argument("--mode", default=ChainMode.FULL_SPLIT.value,
                     choices=[m.value for m in ChainMode])
    run.add_argument("--dataset", help="alternate command-set file")
    run.add_argument("--critiques", help="critique fixture enabling the feedback step")
    run.add_argument("--report-out", help="directory for the exported report")
    run.add_argument("--dump-prompts", help="directory to dump rendered prompts")
    _add_backend_flags(run)
    run.set_defaults(func=_cmd_eval_run)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--home", default="h3", help="default home for new sessions")
    serve.add_argument("--mode", default=ChainMode.FULL_SPLIT.value,
                       choices=[m.value for m in ChainMode])
    serve.add_argument("--reports-root", help="directory of exported eval reports")
    serve.add_argument("--static-root", help="directory with the built console UI")
    _add_backend_flags(serve)
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
