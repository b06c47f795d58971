"""Core graph model: node specs, actions, config, and graph-level checks."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    DuplicateName,
    EmptyFamily,
    MalformedCallableName,
    TooManyChoices,
    UnknownAction,
)


class ActionKind(Enum):
    """What a node does when executed. Values are the serialized tokens used in
    CSVs, graph documents, and compiled output."""

    CHAT = "chat"
    CHAT_EXACT = "chat_exact"
    THOUGHT = "thought"
    EXEC_CODE = "python_function"
    CALL_LOCAL = "local_function"
    CALL_GLOBAL = "global_function"
    CALL_MIXED = "function"
    SET_PROMPT = "prompt"
    TRANSITION = "transition"

    @classmethod
    def parse(cls, token: str) -> "ActionKind":
        for kind in cls:
            if kind.value == token:
                return kind
        raise UnknownAction(f"unknown action token: {token!r}")

    @property
    def is_chat(self) -> bool:
        return self in (ActionKind.CHAT, ActionKind.CHAT_EXACT)

    @property
    def is_call(self) -> bool:
        return self in (
            ActionKind.CALL_LOCAL,
            ActionKind.CALL_GLOBAL,
            ActionKind.CALL_MIXED,
        )

    @property
    def records_turn(self) -> bool:
        return self in (ActionKind.CHAT, ActionKind.CHAT_EXACT, ActionKind.THOUGHT)


# Frame kind opened by each call action.
CALL_FRAME_KINDS = {
    ActionKind.CALL_LOCAL: "local",
    ActionKind.CALL_GLOBAL: "global",
    ActionKind.CALL_MIXED: "mixed",
}

MAX_CHOICES = 26  # classifier answers are single letters A-Z

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_CALLABLE_RE = re.compile(rf"^({_IDENT})\(\s*({_IDENT}(?:\s*,\s*{_IDENT})*)?\s*\)$")


@dataclass
class NodeSpec:
    """One node of an autogram. All fields beyond name/action are optional and
    default to empty."""

    name: str
    action: ActionKind
    instruction: str = ""
    transitions: list[str] = field(default_factory=list)
    transition_question: str = ""
    transition_choices: list[str] = field(default_factory=list)
    boolean_condition: str = ""
    condition_interjection: str = ""
    user_instruction_transitions: list[str] = field(default_factory=list)
    category: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    LIST_FIELDS = ("transitions", "transition_choices", "user_instruction_transitions")
    STR_FIELDS = (
        "name",
        "instruction",
        "transition_question",
        "boolean_condition",
        "condition_interjection",
        "category",
    )

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "action": self.action.value,
            "instruction": self.instruction,
            "transitions": list(self.transitions),
            "transition_question": self.transition_question,
            "transition_choices": list(self.transition_choices),
            "boolean_condition": self.boolean_condition,
            "condition_interjection": self.condition_interjection,
            "user_instruction_transitions": list(self.user_instruction_transitions),
            "category": self.category,
        }
        if self.extra:
            out["extra"] = dict(self.extra)
        return out

    def call_target(self) -> str | None:
        """The callable base this node invokes, or None if the instruction is
        not parseable as a call."""
        if not self.action.is_call:
            return None
        from . import expressions

        try:
            _, remainder = expressions.strip_assignment(self.instruction)
            callee, _, _ = expressions.parse_call_instruction(remainder)
            return callee
        except Exception:
            return None

    @classmethod
    def from_dict(cls, data: dict) -> "NodeSpec":
        return cls(
            name=data["name"],
            action=ActionKind.parse(data["action"]),
            instruction=data.get("instruction", ""),
            transitions=list(data.get("transitions", [])),
            transition_question=data.get("transition_question", ""),
            transition_choices=list(data.get("transition_choices", [])),
            boolean_condition=data.get("boolean_condition", ""),
            condition_interjection=data.get("condition_interjection", ""),
            user_instruction_transitions=list(
                data.get("user_instruction_transitions", [])
            ),
            category=data.get("category", ""),
            extra=dict(data.get("extra", {})),
        )


@dataclass
class CallableSignature:
    base: str
    params: list[str]
    node_name: str = ""  # the root node's exact registered name


def parse_callable_name(name: str) -> CallableSignature | None:
    """Derive a callable signature from a node name like ``f(a,b)``.

    Names without parentheses are plain nodes (returns None). Names containing
    parentheses must be well formed.
    """
    if "(" not in name and ")" not in name:
        return None
    m = _CALLABLE_RE.match(name.strip())
    if not m:
        raise MalformedCallableName(f"malformed callable node name: {name!r}")
    base = m.group(1)
    params_src = m.group(2)
    params = [p.strip() for p in params_src.split(",")] if params_src else []
    return CallableSignature(base=base, params=params, node_name=name.strip())


@dataclass
class BackendSettings:
    """How one model role (chatbot, classifier, userbot) is served."""

    mode: str = "scripted"  # "scripted" | "http"
    endpoint: str = ""
    model: str = ""
    credential_env: str = ""
    token_map: str = ""  # optional path to a JSON letter -> token id map
    timeout: float = 30.0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "endpoint": self.endpoint,
            "model": self.model,
            "credential_env": self.credential_env,
            "token_map": self.token_map,
            "timeout": self.timeout,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BackendSettings":
        mode = data.get("mode", "scripted")
        if mode not in ("scripted", "http"):
            from .errors import ConfigParseError

            raise ConfigParseError(f"unknown backend mode: {mode!r}")
        return cls(
            mode=mode,
            endpoint=data.get("endpoint", ""),
            model=data.get("model", ""),
            credential_env=data.get("credential_env", ""),
            token_map=data.get("token_map", ""),
            timeout=float(data.get("timeout", 30.0)),
        )


DEFAULT_BUILTINS = [
    "len",
    "str",
    "int",
    "float",
    "bool",
    "range",
    "sorted",
    "min",
    "max",
    "abs",
    "sum",
]

DEFAULT_INSTRUCTION_TEMPLATE = (
    "<last_response> Instruction for <agent_name>: <instruction>"
)
DEFAULT_REPLY_START_TEMPLATE = "<agent_name>'s reply:"

TEMPLATE_PLACEHOLDERS = ("<last_response>", "<agent_name>", "<instruction>")


@dataclass
class AutogramConfig:
    """Engine-wide settings. Every field has a usable default so an empty
    config file yields a working offline engine."""

    agent_name: str = "Agent"
    instruction_template: str = DEFAULT_INSTRUCTION_TEMPLATE
    reply_start_template: str = DEFAULT_REPLY_START_TEMPLATE
    reply_start_type: str = "suffix"  # "suffix" | "prefix"
    default_interjection_question: str = "Which of the following is True?"
    default_interjection_last_choice: str = "None of the above."
    interjection_question_override: str = ""
    self_referential: bool = False
    allowed_builtins: list[str] = field(default_factory=lambda: list(DEFAULT_BUILTINS))
    host_function_names: list[str] = field(default_factory=list)
    undefined_dollar_policy: str = "error"  # "error" | "literal"
    start_node: str = ""  # empty: first added node
    max_steps: int = 1000
    chatbot: BackendSettings = field(default_factory=BackendSettings)
    classifier: BackendSettings = field(default_factory=BackendSettings)
    userbot: BackendSettings = field(default_factory=BackendSettings)

    def validate(self) -> None:
        from .errors import ConfigParseError, TemplateMissingPlaceholder

        for ph in TEMPLATE_PLACEHOLDERS:
            if self.instruction_template.count(ph) != 1:
                raise TemplateMissingPlaceholder(
                    f"instruction_template must contain {ph} exactly once"
                )
        if self.reply_start_type not in ("suffix", "prefix"):
            raise ConfigParseError(
                f"reply_start_type must be 'suffix' or 'prefix', got "
                f"{self.reply_start_type!r}"
            )
        if self.undefined_dollar_policy not in ("error", "literal"):
            raise ConfigParseError(
                f"undefined_dollar_policy must be 'error' or 'literal', got "
                f"{self.undefined_dollar_policy!r}"
            )

    @property
    def interjection_question(self) -> str:
        return self.interjection_question_override or self.default_interjection_question

    @property
    def reply_start(self) -> str:
        return self.reply_start_template.replace("<agent_name>", self.agent_name)


@dataclass
class Diagnostic:
    severity: str  # "error" | "warning"
    node: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: node {self.node!r}: {self.message}"


_WILDCARD_MEMBER_RE = re.compile(r"^(.*)\.([a-z])$")


def is_wildcard(transition: str) -> bool:
    return transition.endswith(".*")


def is_return(transition: str) -> bool:
    return transition == "return" or transition.startswith("return ")


def is_variable(transition: str) -> bool:
    return transition.startswith("$")


class GraphModel:
    """Nodes in insertion order plus the config and the callable registry."""

    def __init__(self, config: AutogramConfig | None = None):
        self.nodes: dict[str, NodeSpec] = {}
        self.config = config or AutogramConfig()
        self.callables: dict[str, CallableSignature] = {}

    @property
    def start_node(self) -> str | None:
        if self.config.start_node:
            return self.config.start_node
        return next(iter(self.nodes), None)

    @property
    def interjection_nodes(self) -> list[NodeSpec]:
        return [n for n in self.nodes.values() if n.condition_interjection]

    def add_node(self, spec: NodeSpec) -> str:
        if spec.name in self.nodes:
            raise DuplicateName(f"node {spec.name!r} already exists")
        if not isinstance(spec.action, ActionKind):
            spec.action = ActionKind.parse(spec.action)
        if len(spec.transition_choices) > MAX_CHOICES:
            raise TooManyChoices(
                f"node {spec.name!r} has {len(spec.transition_choices)} choices; "
                f"the classifier supports at most {MAX_CHOICES}"
            )
        sig = parse_callable_name(spec.name)
        if sig is not None:
            self.callables[sig.base] = sig
        self.nodes[spec.name] = spec
        return spec.name

    def copy(self) -> "GraphModel":
        import copy as _copy

        g = GraphModel(_copy.deepcopy(self.config))
        for spec in self.nodes.values():
            g.add_node(_copy.deepcopy(spec))
        return g


def resolve_wildcard_family(graph: GraphModel, pattern: str) -> list[NodeSpec]:
    """Members of a ``<prefix>.*`` family, in alphabetical letter order."""
    if not is_wildcard(pattern):
        raise EmptyFamily(f"{pattern!r} is not a wildcard transition")
    prefix = pattern[:-2]
    members: list[tuple[str, NodeSpec]] = []
    for name, spec in graph.nodes.items():
        m = _WILDCARD_MEMBER_RE.match(name)
        if m and m.group(1) == prefix:
            members.append((m.group(2), spec))
    if not members:
        raise EmptyFamily(f"wildcard {pattern!r} matches no nodes")
    members.sort(key=lambda pair: pair[0])
    return [spec for _, spec in members]


def validate_graph(graph: GraphModel) -> list[Diagnostic]:
    """Static checks. Errors mean the graph will misbehave at runtime; warnings
    are suspicious but legal."""
    out: list[Diagnostic] = []
    for spec in graph.nodes.values():
        _check_transitions(graph, spec, out)
        _check_choices(graph, spec, out)
        _check_call_target(graph, spec, out)
    _check_reachability(graph, out)
    return out


def _check_transitions(graph: GraphModel, spec: NodeSpec, out: list[Diagnostic]):
    for t in spec.transitions:
        if is_return(t) or is_variable(t):
            continue
        if is_wildcard(t):
            try:
                family = resolve_wildcard_family(graph, t)
            except EmptyFamily:
                out.append(Diagnostic("error", spec.name, f"wildcard {t!r} matches no nodes"))
                continue
            if len(family) < 2:
                out.append(
                    Diagnostic(
                        "error",
                        spec.name,
                        f"wildcard {t!r} resolves to a single member; "
                        "a family needs at least two",
                    )
                )
            for member in family[:-1]:
                if not member.boolean_condition:
                    out.append(
                        Diagnostic(
                            "error",
                            member.name,
                            "non-final wildcard member lacks a boolean_condition",
                        )
                    )
            continue
        if t not in graph.nodes:
            out.append(Diagnostic("error", spec.name, f"dangling transition to {t!r}"))


def _check_choices(graph: GraphModel, spec: NodeSpec, out: list[Diagnostic]):
    if spec.transition_choices and len(spec.transition_choices) != len(spec.transitions):
        out.append(
            Diagnostic(
                "error",
                spec.name,
                f"{len(spec.transition_choices)} transition_choices for "
                f"{len(spec.transitions)} transitions",
            )
        )
        return
    if len(spec.transitions) > 1 and not spec.transition_choices:
        if spec.action.is_call:
            return
        if any(t in graph.nodes and graph.nodes[t].condition_interjection for t in spec.transitions):
            return
        if all(is_wildcard(t) or is_return(t) or is_variable(t) for t in spec.transitions):
            return
        out.append(
            Diagnostic(
                "warning",
                spec.name,
                "multiple transitions but no transition_question/choices; "
                "the classifier cannot pick between them",
            )
        )


def _check_call_target(graph: GraphModel, spec: NodeSpec, out: list[Diagnostic]):
    if not spec.action.is_call:
        return
    callee = spec.call_target()
    if callee is None:
        out.append(Diagnostic("error", spec.name, "unparseable call instruction"))
        return
    if callee not in graph.callables:
        out.append(
            Diagnostic("error", spec.name, f"call target {callee!r} has no callable node")
        )


def _check_reachability(graph: GraphModel, out: list[Diagnostic]):
    start = graph.start_node
    if start is None or start not in graph.nodes:
        return
    from . import expressions

    seen: set[str] = set()
    frontier = [start]
    has_chat = any(s.action.is_chat for s in graph.nodes.values())
    if has_chat:
        # interjection nodes are reachable from every chat node
        frontier.extend(n.name for n in graph.interjection_nodes)
    while frontier:
        name = frontier.pop()
        if name in seen or name not in graph.nodes:
            continue
        seen.add(name)
        spec = graph.nodes[name]
        for t in spec.transitions:
            if is_return(t) or is_variable(t):
                continue
            if is_wildcard(t):
                try:
                    frontier.extend(m.name for m in resolve_wildcard_family(graph, t))
                except EmptyFamily:
                    pass
            elif t in graph.nodes:
                frontier.append(t)
        if spec.action.is_call:
            try:
                _, remainder = expressions.strip_assignment(spec.instruction)
                callee, _, _ = expressions.parse_call_instruction(remainder)
                if callee in graph.callables:
                    frontier.append(graph.callables[callee].node_name)
            except Exception:
                pass
    for name in graph.nodes:
        if name not in seen:
            out.append(Diagnostic("warning", name, "unreachable from the start node"))
