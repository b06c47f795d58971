"""Loading and saving graphs in their authoring formats.

Graphs arrive either as spreadsheets (one node per row, headers named after
node fields) or as python-like programs handled by the compiler. This module
owns the spreadsheet and config loaders plus the exported graph document that
downstream tools (CLI export, HTTP gateway, studio) consume.
"""

from __future__ import annotations

import ast
import csv
import difflib
import io
import json
from dataclasses import asdict
from pathlib import Path

from .errors import AuthoringError, ConfigParseError, RowParseError, UnknownHeader
from .model import (
    ActionKind,
    AutogramConfig,
    BackendSettings,
    GraphModel,
    NodeSpec,
    is_return,
    is_variable,
    is_wildcard,
    resolve_wildcard_family,
)

_FIELD_NAMES = set(NodeSpec.LIST_FIELDS) | set(NodeSpec.STR_FIELDS) | {"name", "action"}


def _match_header(header: str) -> str | None:
    """Exact field name, a close misspelling (an error), or None (opaque)."""
    key = header.strip()
    if key in _FIELD_NAMES:
        return key
    close = difflib.get_close_matches(key, _FIELD_NAMES, n=1, cutoff=0.75)
    if close:
        raise UnknownHeader(f"unknown column {header!r}; did you mean {close[0]!r}?")
    return None


def _parse_list_cell(cell: str, row: int) -> list[str]:
    cell = cell.strip()
    if not cell:
        return []
    if cell.startswith("["):
        try:
            value = ast.literal_eval(cell)
        except (SyntaxError, ValueError) as exc:
            raise RowParseError(f"bad list literal: {exc}", row=row) from exc
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise RowParseError("list cells must contain strings", row=row)
        return value
    return [part.strip() for part in cell.split("\n") if part.strip()]


def load_csv_text(text: str, config: AutogramConfig | None = None) -> GraphModel:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if any(cell.strip() for cell in row)]
    if not rows:
        return GraphModel(config)
    headers = [h.strip() for h in rows[0]]
    mapped = [_match_header(h) for h in headers]
    graph = GraphModel(config)
    for row_index, row in enumerate(rows[1:], start=2):
        fields: dict = {}
        extra: dict = {}
        for header, key, cell in zip(headers, mapped, row):
            if key is None:
                if cell.strip():
                    extra[header] = cell
            elif key in NodeSpec.LIST_FIELDS:
                fields[key] = _parse_list_cell(cell, row_index)
            else:
                fields[key] = cell.strip() if key in ("name", "action") else cell
        name = fields.get("name", "")
        if not name:
            raise RowParseError("row has no name", row=row_index)
        if not fields.get("action"):
            raise RowParseError(f"node {name!r} has no action", row=row_index)
        fields["extra"] = extra
        graph.add_node(NodeSpec.from_dict(fields))
    return graph


def load_csv(path: str | Path, config: AutogramConfig | None = None) -> GraphModel:
    return load_csv_text(Path(path).read_text(encoding="utf-8"), config)


def save_csv(graph: GraphModel, path: str | Path) -> None:
    headers = ["name", "action"]
    headers += [f for f in NodeSpec.STR_FIELDS if f != "name"]
    headers += list(NodeSpec.LIST_FIELDS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(headers)
        for spec in graph.nodes.values():
            row = []
            for key in headers:
                value = getattr(spec, key)
                if key == "action":
                    value = spec.action.value
                elif key in NodeSpec.LIST_FIELDS:
                    if any("\n" in item for item in value):
                        value = repr(value)
                    else:
                        value = "\n".join(value)
                row.append(value)
            writer.writerow(row)


# --------------------------------------------------------------------- config

_BACKEND_KEYS = {"mode", "endpoint", "model", "credential_env", "token_map", "timeout"}
_BACKEND_FIELDS = {"chatbot", "classifier", "userbot"}


def _backend_from_dict(doc: dict, where: str) -> BackendSettings:
    if not isinstance(doc, dict):
        raise ConfigParseError(f"{where} must be an object")
    unknown = set(doc) - _BACKEND_KEYS
    if unknown:
        raise ConfigParseError(f"{where} has unknown keys: {sorted(unknown)}")
    return BackendSettings.from_dict(doc)


def config_from_dict(doc: dict) -> AutogramConfig:
    if not isinstance(doc, dict):
        raise ConfigParseError("config must be a JSON object")
    known = {f.name for f in AutogramConfig.__dataclass_fields__.values()}  # type: ignore[attr-defined]
    kwargs: dict = {}
    for key, value in doc.items():
        if key not in known:
            close = difflib.get_close_matches(key, known, n=1, cutoff=0.6)
            hint = f"; did you mean {close[0]!r}?" if close else ""
            raise ConfigParseError(f"unknown config key {key!r}{hint}")
        if key in _BACKEND_FIELDS:
            kwargs[key] = _backend_from_dict(value, key)
        else:
            kwargs[key] = value
    try:
        config = AutogramConfig(**kwargs)
    except TypeError as exc:
        raise ConfigParseError(str(exc)) from exc
    config.validate()
    return config


def load_config(path: str | Path) -> AutogramConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_to_dict(config: AutogramConfig) -> dict:
    return asdict(config)


# ------------------------------------------------------------ graph documents

DOCUMENT_VERSION = 1


def _return_owners(graph: GraphModel) -> dict[str, str]:
    """Maps each node carrying a return transition to the callable that owns
    it, by walking each callable body (call edges are not crossed)."""
    owners: dict[str, str] = {}
    roots = [("", graph.start_node)] if graph.nodes else []
    for base, sig in graph.callables.items():
        roots.append((base, sig.node_name))
    for base, root in roots:
        if not root or root not in graph.nodes:
            continue
        seen: set[str] = set()
        stack = [root]
        while stack:
            name = stack.pop()
            if name in seen or name not in graph.nodes:
                continue
            seen.add(name)
            for target in graph.nodes[name].transitions:
                if is_return(target):
                    owners.setdefault(name, base)
                elif is_wildcard(target):
                    try:
                        members = resolve_wildcard_family(graph, target)
                    except Exception:
                        members = []
                    stack.extend(m.name for m in members)
                elif not is_variable(target):
                    stack.append(target)
    return owners


def export_graph_document(graph: GraphModel) -> dict:
    nodes = [spec.to_dict() for spec in graph.nodes.values()]
    edges: list[dict] = []
    owners = _return_owners(graph)
    chat_nodes = [s.name for s in graph.nodes.values() if s.action.is_chat]
    interjections = graph.interjection_nodes

    def edge(src: str, dst: str, kind: str, label: str = "") -> None:
        edges.append({"from": src, "to": dst, "kind": kind, "label": label})

    for spec in graph.nodes.values():
        if spec.action.is_call:
            callee = spec.call_target()
            if callee and callee in graph.callables:
                edge(spec.name, graph.callables[callee].node_name, "function_call", callee)
        for target in spec.transitions:
            if is_return(target):
                base = owners.get(spec.name, "")
                sink = f"return({base})" if base else "return"
                edge(spec.name, sink, "return", target)
            elif is_wildcard(target):
                try:
                    members = resolve_wildcard_family(graph, target)
                except Exception:
                    members = []
                for member in members:
                    edge(spec.name, member.name, "wildcard",
                         member.boolean_condition or "else")
            elif is_variable(target):
                edge(spec.name, target, "variable", target)
            else:
                edge(spec.name, target, "standard")
    for chat in chat_nodes:
        for spec in interjections:
            edge(chat, spec.name, "interjection", spec.condition_interjection)
    return {
        "version": DOCUMENT_VERSION,
        "start_node": graph.start_node,
        "callables": {base: sig.node_name for base, sig in graph.callables.items()},
        "nodes": nodes,
        "edges": edges,
    }


def import_graph_document(doc: dict, config: AutogramConfig | None = None) -> GraphModel:
    """Rebuilds a graph from an exported document. Edges are derived data and
    are ignored; nodes and the start node carry everything."""
    if not isinstance(doc, dict) or "nodes" not in doc:
        raise AuthoringError("not a graph document")
    if doc.get("version") != DOCUMENT_VERSION:
        raise AuthoringError(f"unsupported document version {doc.get('version')!r}")
    graph = GraphModel(config)
    for node in doc["nodes"]:
        graph.add_node(NodeSpec.from_dict(node))
    start = doc.get("start_node")
    if start and start != graph.start_node:
        graph.config.start_node = start
    return graph


# ------------------------------------------------------------------- examples


def examples_dir() -> Path:
    return Path(__file__).parent / "data"


def bundled_examples() -> dict[str, Path]:
    return {p.stem: p for p in sorted(examples_dir().iterdir()) if p.is_file()}


def load_graph(path: str | Path, config: AutogramConfig | None = None) -> GraphModel:
    """Loads a graph from a spreadsheet, an exported document, or a program,
    picked by file extension."""
    path = Path(path)
    if path.suffix == ".csv":
        return load_csv(path, config)
    if path.suffix == ".json":
        return import_graph_document(
            json.loads(path.read_text(encoding="utf-8")), config
        )
    from .compiler import compile_source

    return compile_source(path.read_text(encoding="utf-8"), config)
