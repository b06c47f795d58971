"""Command line entry points.

``autogram compile|validate|export|chat|run-fn|simulate|serve`` all take a
graph file (.csv spreadsheet, .json exported document, or a program) plus an
optional JSON config, and for offline use a scripted-backend fixture.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import authoring, backends
from .errors import AutogramError
from .model import AutogramConfig, GraphModel, validate_graph
from .runtime import Session


def _read_json(path: str) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _load(args) -> GraphModel:
    config = authoring.load_config(args.config) if args.config else None
    graph = authoring.load_graph(args.graph, config)
    if getattr(args, "max_steps", None):
        graph.config.max_steps = args.max_steps
    return graph


def _session(args, graph: GraphModel) -> Session:
    fixture = _read_json(args.scripted) if getattr(args, "scripted", None) else None
    chatbot = backends.backend_from_settings(graph.config.chatbot, fixture)
    classifier = backends.backend_from_settings(graph.config.classifier, fixture)
    userbot = backends.backend_from_settings(graph.config.userbot, fixture)
    return Session(
        graph,
        chatbot=chatbot,
        classifier=classifier,
        userbot=userbot,
        seed=getattr(args, "seed", 0),
    )


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def cmd_compile(args) -> int:
    _emit(authoring.export_graph_document(_load(args)), args.output)
    return 0


def cmd_export(args) -> int:
    return cmd_compile(args)


def cmd_validate(args) -> int:
    graph = _load(args)
    diagnostics = validate_graph(graph)
    for d in diagnostics:
        print(d)
    errors = sum(1 for d in diagnostics if d.severity == "error")
    print(f"{len(graph.nodes)} nodes, {errors} errors, "
          f"{len(diagnostics) - errors} warnings")
    return 1 if errors else 0


def cmd_chat(args) -> int:
    session = _session(args, _load(args))
    name = session.config.agent_name
    while True:
        try:
            user = input("You: ")
        except EOFError:
            return 0
        reply = session.reply(user)
        print(f"{name}: {reply}")


def cmd_run_fn(args) -> int:
    session = _session(args, _load(args))
    call_args = []
    for raw in args.args:
        try:
            call_args.append(json.loads(raw))
        except json.JSONDecodeError:
            call_args.append(raw)
    result = session.apply_fn(args.callable, call_args, frame_kind=args.frame)
    print(json.dumps(result, default=str))
    return 0


def cmd_simulate(args) -> int:
    session = _session(args, _load(args))
    name = session.config.agent_name
    user_text = args.opener
    for _ in range(args.turns):
        print(f"User: {user_text}")
        print(f"{name}: {session.reply(user_text)}")
        simulated = session.simulate_user()
        user_text = simulated.text
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    fixture = _read_json(args.scripted) if args.scripted else None
    app = create_app(
        _load(args),
        fixture=fixture,
        store_dir=args.store,
        expose_variables=args.expose_variables,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _add_common(p: argparse.ArgumentParser, scripted: bool = True) -> None:
    p.add_argument("graph", help="graph file: .csv, .json document, or program")
    p.add_argument("--config", help="JSON config file")
    p.add_argument(
        "--max-steps",
        type=int,
        help="override the node execution budget (deep recursion needs more)",
    )
    if scripted:
        p.add_argument("--scripted", help="JSON fixture for offline scripted backends")
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="autogram")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a program and print the graph document")
    _add_common(p, scripted=False)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("export", help="export any graph as a graph document")
    _add_common(p, scripted=False)
    p.add_argument("-o", "--output")
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("validate", help="check a graph and print diagnostics")
    _add_common(p, scripted=False)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("chat", help="talk to a graph on stdin/stdout")
    _add_common(p)
    p.set_defaults(fn=cmd_chat)

    p = sub.add_parser("run-fn", help="call a callable node and print the result")
    _add_common(p)
    p.add_argument("callable", help="callable base name, e.g. fibonacci")
    p.add_argument("args", nargs="*", help="arguments, parsed as JSON when possible")
    p.add_argument("--frame", choices=["local", "global", "mixed"], default="local")
    p.set_defaults(fn=cmd_run_fn)

    p = sub.add_parser("simulate", help="run an automated conversation")
    _add_common(p)
    p.add_argument("--turns", type=int, default=3)
    p.add_argument("--opener", default="Hello!")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve", help="serve the HTTP gateway")
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8030)
    p.add_argument("--store", help="directory for session state files")
    p.add_argument("--expose-variables", action="store_true",
                   help="include frame variables in state responses")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (AutogramError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
