"""Command-line front end: check, derive, validate, analyze, transform, serve.

Machine-readable output goes to stdout, human diagnostics to stderr. Exit
codes: 0 success, 1 diagnostics with errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, configurator, dsl, workflow
from .derivation import DerivationError, DeveloperBinding, derive
from .model import VariabilityModel, has_errors, well_formed


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _print_diags(diags) -> None:
    for d in diags:
        print(f"{d.severity.value}: {d.code}: {d.message}", file=sys.stderr)


def _parse_model(path: str) -> VariabilityModel:
    try:
        return dsl.parse(_read(path))
    except dsl.ParseFailure as exc:
        for e in exc.errors:
            print(f"{path}:{e}", file=sys.stderr)
        print(json.dumps({"parse_errors": [e.to_json() for e in exc.errors]}))
        raise SystemExit(1)


def _checked_model(path: str) -> VariabilityModel:
    model = _parse_model(path)
    diags = well_formed(model)
    if has_errors(diags):
        _print_diags(diags)
        print(json.dumps({"diagnostics": [d.to_json() for d in diags]}))
        raise SystemExit(1)
    return model


def _parse_bind_flags(pairs: list[str]) -> DeveloperBinding:
    choices: dict[str, list[str]] = {}
    for item in pairs:
        if "=" not in item:
            raise SystemExit(f"--bind expects VP=V[,V...], got {item!r}")
        vp, _, vs = item.partition("=")
        choices.setdefault(vp, []).extend(v for v in vs.split(",") if v)
    return DeveloperBinding.of(choices)


def cmd_check(args) -> int:
    model = _parse_model(args.file)
    diags = well_formed(model)
    _print_diags(diags)
    print(json.dumps([d.to_json() for d in diags]))
    return 1 if has_errors(diags) else 0


def cmd_derive(args) -> int:
    model = _checked_model(args.file)
    binding = _parse_bind_flags(args.bind or [])
    try:
        cm, trace = derive(model, binding)
    except DerivationError as exc:
        _print_diags(exc.diagnostics)
        print(json.dumps({"diagnostics": [d.to_json() for d in exc.diagnostics]}))
        return 1
    sys.stdout.write(dsl.serialize(cm.model))
    if args.trace:
        for effect in trace.to_json():
            print(json.dumps(effect), file=sys.stderr)
    return 0


def cmd_validate(args) -> int:
    model = _checked_model(args.model_file)
    if model.internal_vps():
        print(
            f"'{args.model_file}' still has internal variation points; derive it first",
            file=sys.stderr,
        )
        return 1
    cfg = configurator.TenantConfiguration.from_json(json.loads(_read(args.config)))
    diags = configurator.validate_configuration(model, cfg)
    _print_diags(diags)
    print(json.dumps([d.to_json() for d in diags]))
    return 1 if diags else 0


def cmd_analyze(args) -> int:
    model = _checked_model(args.file)
    try:
        print(json.dumps(analysis.report(model, cap=args.cap)))
    except analysis.UnsupportedModelError as exc:
        print(f"unsupported model: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_transform(args) -> int:
    model = _checked_model(args.model_file)
    graph = workflow.load_graph(json.loads(_read(args.workflow)))
    diags = workflow.validate_workflow(graph, model)
    if diags:
        _print_diags(diags)
        print(json.dumps({"diagnostics": [d.to_json() for d in diags]}))
        return 1
    binding = _parse_bind_flags(args.bind or [])
    try:
        cm, trace = derive(model, binding)
        resolved = workflow.resolve_workflow(graph, cm, trace)
        if args.config:
            cfg = configurator.TenantConfiguration.from_json(json.loads(_read(args.config)))
            resolved = workflow.apply_configuration(resolved, cfg, cm)
    except (DerivationError, workflow.WorkflowError) as exc:
        _print_diags(exc.diagnostics)
        print(json.dumps({"diagnostics": [d.to_json() for d in exc.diagnostics]}))
        return 1
    print(json.dumps(workflow.graph_to_json(resolved), indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ModelStore, create_app

    store = ModelStore(state_dir=args.state_dir, session_ttl=args.session_ttl)
    app = create_app(store)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ovm", description="Variability-model engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="parse a model and report well-formedness diagnostics")
    p.add_argument("file")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("derive", help="derive a customization model from developer bindings")
    p.add_argument("file")
    p.add_argument("--bind", action="append", metavar="VP=V[,V...]")
    p.add_argument("--trace", action="store_true", help="print the derivation trace to stderr")
    p.set_defaults(fn=cmd_derive)

    p = sub.add_parser("validate", help="validate a tenant configuration against a customization model")
    p.add_argument("model_file")
    p.add_argument("config")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("analyze", help="enumerate configurations, void and dead-variant report")
    p.add_argument("file")
    p.add_argument("--cap", type=int, default=analysis.DEFAULT_CAP)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("transform", help="resolve a workflow's variation points")
    p.add_argument("model_file")
    p.add_argument("workflow")
    p.add_argument("--bind", action="append", metavar="VP=V[,V...]")
    p.add_argument("--config", help="tenant configuration to apply after resolution")
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=7710)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", default=None)
    p.add_argument("--session-ttl", type=float, default=3600.0)
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except dsl.SerializeError as exc:
        print(f"serialization error: {exc}", file=sys.stderr)
        return 1
    except (workflow.GraphFormatError, json.JSONDecodeError, ValueError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"no such file: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
