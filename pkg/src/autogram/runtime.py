"""The interpreter that walks an autogram graph.

Each loop iteration mirrors the engine's six steps: settle the previous
node's variable output, apply its transition, post-process the raw target
into a concrete node, execute that node's instruction, and stop when a
chat-kind node produces a user-facing reply. Function-call nodes push
frames; return transitions pop them and resume the calling node's declared
transitions without re-executing its instruction.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from . import backends as backends_mod
from . import expressions as ex
from .errors import (
    ArityMismatch,
    AutogramError,
    ChatInsideApplyFn,
    EmptyTransitions,
    GraphError,
    MissingUserPrompts,
    PopRoot,
    ReturnAtRoot,
    SelfRefDisabled,
    StepLimitExceeded,
    TransitionConfigError,
    TypeMismatch,
    UnknownCallable,
    UnknownDollarVariable,
    UnknownHostFunction,
    UnknownNode,
)
from .memory import MemoryObject, TurnRecord
from .model import (
    CALL_FRAME_KINDS,
    ActionKind,
    GraphModel,
    NodeSpec,
    is_return,
    is_variable,
    is_wildcard,
    resolve_wildcard_family,
    validate_graph,
)
from .prompts import build_chat_prompt, build_classifier_prompt, format_mc


def check_node_name(name) -> bool:
    """Name validator exposed to graphs as meta_utils.check_node_name: all
    lowercase letters and underscores."""
    return isinstance(name, str) and re.fullmatch(r"[a-z_]+", name) is not None


def default_host_registry() -> dict:
    return {"meta_utils.check_node_name": check_node_name}


@dataclass
class NodeOutcome:
    text_output: str = ""
    value_output: object = None
    is_user_facing: bool = False


@dataclass
class SimulatedUser:
    text: str
    index: int


@dataclass
class ClassifierDecision:
    node: str
    kind: str  # "transition" | "interjection"
    mc_text: str
    index: int
    num_choices: int


@dataclass
class Trace:
    """Lightweight observability: classifier picks and stack usage."""

    decisions: list[ClassifierDecision] = field(default_factory=list)
    max_fn_depth: int = 0
    last_popped_scope: dict | None = None

    def note_depth(self, stack_depth: int) -> None:
        fn_depth = stack_depth - 1  # root frame excluded
        if fn_depth > self.max_fn_depth:
            self.max_fn_depth = fn_depth


class EngineHandle(ex.ExprObject):
    """The value bound to ``self`` in self-referential graphs."""

    def __init__(self, session: "Session"):
        self._session = session

    def expr_methods(self) -> set[str]:
        return {"add_node"}

    def expr_call(self, method: str, args: list, kwargs: dict):
        if method == "add_node":
            if args:
                raise TypeMismatch("add_node takes keyword arguments only")
            return self._session.add_node(**kwargs)
        raise ex.UnknownMethod(f"engine handle has no method {method!r}")

    def display(self) -> str:
        return "<engine handle>"


class _ReturnSignal:
    """Internal: a return transition popped the entry frame of apply_fn."""

    def __init__(self, value):
        self.value = value


_RETURN_RE = re.compile(r"^return(?:\s+([A-Za-z_][A-Za-z0-9_]*))?$")
_IDENT_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_NODE_FIELD_NAMES = {
    "name",
    "action",
    "instruction",
    "transitions",
    "transition_question",
    "transition_choices",
    "boolean_condition",
    "condition_interjection",
    "user_instruction_transitions",
    "category",
}


def _annotate(exc: BaseException, node_name: str) -> None:
    # keep the original type; prefix the message once
    if getattr(exc, "_node_annotated", False):
        return
    if exc.args and isinstance(exc.args[0], str):
        exc.args = (f"[node {node_name}] {exc.args[0]}",) + exc.args[1:]
    else:
        exc.args = (f"[node {node_name}]",) + exc.args
    exc._node_annotated = True  # type: ignore[attr-defined]


class Session:
    """One conversation (or one function run) over a graph."""

    def __init__(
        self,
        graph: GraphModel,
        chatbot: backends_mod.LlmBackend | None = None,
        classifier: backends_mod.LlmBackend | None = None,
        userbot: backends_mod.LlmBackend | None = None,
        host_registry: dict | None = None,
        seed: int = 0,
        memory: MemoryObject | None = None,
        validate: bool = True,
    ):
        self.graph = graph
        config = graph.config
        config.validate()
        if validate:
            problems = [d for d in validate_graph(graph) if d.severity == "error"]
            if problems:
                raise GraphError(
                    "graph failed validation:\n" + "\n".join(str(d) for d in problems)
                )
        self.chatbot = chatbot or backends_mod.backend_from_settings(config.chatbot)
        self.classifier = classifier or backends_mod.backend_from_settings(
            config.classifier
        )
        if userbot is not None:
            self.userbot = userbot
        else:
            self.userbot = self.chatbot
        registry = host_registry if host_registry is not None else default_host_registry()
        missing = [n for n in config.host_function_names if n not in registry]
        if missing:
            raise UnknownHostFunction(
                f"host functions not registered: {', '.join(missing)}"
            )
        self.host = {n: registry[n] for n in config.host_function_names}
        self.rng = random.Random(seed)
        self.engine_handle = EngineHandle(self)
        self.memory = memory if memory is not None else MemoryObject()
        self.trace = Trace()

    @property
    def config(self):
        return self.graph.config

    # ----------------------------------------------------------- plumbing

    def _node(self, name: str | None) -> NodeSpec:
        if name is None or name not in self.graph.nodes:
            raise UnknownNode(f"no node named {name!r}")
        return self.graph.nodes[name]

    def _ctx(self) -> ex.EvalContext:
        return ex.EvalContext(
            resolver=self.memory,
            builtins=self.config.allowed_builtins,
            host=self.host,
            engine_handle=self.engine_handle if self.config.self_referential else None,
            dollar_policy=self.config.undefined_dollar_policy,
        )

    def _render(self, text: str) -> str:
        return ex.render_dollar(text, self._ctx())

    def add_node(self, **fields) -> str:
        """Append a node at runtime (self-referential mode only)."""
        if not self.config.self_referential:
            raise SelfRefDisabled(
                "add_node is only available when config.self_referential is true"
            )
        unknown = set(fields) - _NODE_FIELD_NAMES
        if unknown:
            raise TypeMismatch(f"add_node got unknown fields: {', '.join(sorted(unknown))}")
        if "name" not in fields or "action" not in fields:
            raise TypeMismatch("add_node requires name and action")
        spec = NodeSpec.from_dict({k: v for k, v in fields.items()})
        return self.graph.add_node(spec)

    def restore_memory(self, doc: dict) -> None:
        self.memory = MemoryObject.deserialize(doc, self.engine_handle)

    # --------------------------------------------------------- main loops

    def reply(self, user_reply: str = "") -> str:
        """Advance the conversation with one user reply and return the next
        user-facing output."""
        outcome = self._loop(user_reply=user_reply, in_function=False)
        return outcome.text_output

    def apply_fn(self, callable_name: str, args: list | None = None, frame_kind: str = "local"):
        """Run a callable subgraph to completion and return its value."""
        sig = self.graph.callables.get(callable_name)
        if sig is None:
            raise UnknownCallable(f"no callable node for {callable_name!r}")
        args = list(args or [])
        if len(args) != len(sig.params):
            raise ArityMismatch(
                f"{callable_name} takes {len(sig.params)} arguments, got {len(args)}"
            )
        mem = self.memory
        snapshot = mem.serialize()
        saved_last = mem.last_node
        mem.push_frame(frame_kind, None, dict(zip(sig.params, args)))
        self.trace.note_depth(mem.depth)
        try:
            result = self._loop(
                user_reply="", in_function=True, entry=sig.node_name
            )
        except AutogramError:
            self.restore_memory(snapshot)
            raise
        mem.last_node = saved_last
        return result

    def _loop(self, user_reply: str, in_function: bool, entry: str | None = None):
        mem = self.memory
        pending = user_reply
        steps = 0
        current = entry
        if not in_function and mem.last_node is None:
            current = self.graph.start_node
            if current is None:
                raise UnknownNode("the graph has no nodes")
        while True:
            steps += 1
            if steps > self.config.max_steps:
                raise StepLimitExceeded(
                    f"exceeded {self.config.max_steps} node executions"
                )
            snapshot = mem.serialize() if not in_function else None
            saved_pending = pending
            context_name = current or mem.last_node or "?"
            try:
                if current is None:
                    prev = self._node(mem.last_node)
                    context_name = prev.name
                    self._settle_assignment(prev)
                    raw = self.apply_transition(prev, pending)
                    target = self.post_process_transition(raw, prev, pending)
                    if isinstance(target, _ReturnSignal):
                        if not in_function:
                            raise ReturnAtRoot(
                                "return transition outside any function call"
                            )
                        return target.value
                    current = target
                node = self._node(current)
                context_name = node.name
                if in_function and node.action.is_chat:
                    raise ChatInsideApplyFn(
                        f"chat node {node.name!r} reached while running a function"
                    )
                outcome = self.apply_instruction(node, pending)
                mem.last_node = node.name
                mem.visit_log.append(node.name)
                if node.action.records_turn:
                    pending = ""
                if outcome.is_user_facing:
                    return outcome
                current = None
            except AutogramError as exc:
                if snapshot is not None:
                    self.restore_memory(snapshot)
                pending = saved_pending
                _annotate(exc, context_name)
                raise

    def _settle_assignment(self, prev: NodeSpec) -> None:
        """Steps 1-2: deliver the previous node's variable output. Call nodes
        keep their pending target armed for the eventual return."""
        if prev.action.is_call:
            return
        top = self.memory.top
        if top.pending_assign_target is not None:
            self.memory.assign_variable(
                top.pending_assign_target, top.last_instruction_output
            )
            top.pending_assign_target = None

    # --------------------------------------------------------- transitions

    def apply_transition(self, node: NodeSpec, user_reply: str = "") -> str:
        """Step 3: the raw transition string out of ``node``."""
        if node.action.is_call:
            target, remainder = ex.strip_assignment(node.instruction)
            callee, _, _ = ex.parse_call_instruction(self._render(remainder))
            sig = self.graph.callables.get(callee)
            if sig is None:
                raise UnknownCallable(f"no callable node for {callee!r}")
            return sig.node_name
        if node.action.is_chat and self.graph.interjection_nodes:
            hit = self.interjection_check(user_reply)
            if hit is not None:
                return hit
        return self._declared_transition(node, user_reply)

    def _declared_transition(self, node: NodeSpec, user_reply: str) -> str:
        if not node.transitions:
            raise EmptyTransitions(f"node {node.name!r} has no transitions")
        if len(node.transitions) == 1:
            return node.transitions[0]
        choices = node.transition_choices
        if not node.transition_question or len(choices) != len(node.transitions):
            raise TransitionConfigError(
                f"node {node.name!r} has {len(node.transitions)} transitions but no "
                "matching transition_question/choices"
            )
        question = self._render(node.transition_question)
        mc = format_mc(question, choices)
        prompt = build_classifier_prompt(
            self.memory, mc, len(choices), user_reply=user_reply
        )
        index = backends_mod.classify(
            self.classifier, prompt.history_text, mc, len(choices)
        )
        self.trace.decisions.append(
            ClassifierDecision(node.name, "transition", mc, index, len(choices))
        )
        return node.transitions[index]

    def interjection_check(self, user_reply: str = "") -> str | None:
        """Ask the classifier whether any interjection condition holds; None
        means the final default choice (no interjection) won."""
        nodes = self.graph.interjection_nodes
        if not nodes:
            return None
        choices = [n.condition_interjection for n in nodes]
        choices.append(self.config.default_interjection_last_choice)
        mc = format_mc(self.config.interjection_question, choices)
        prompt = build_classifier_prompt(
            self.memory, mc, len(choices), user_reply=user_reply
        )
        index = backends_mod.classify(
            self.classifier, prompt.history_text, mc, len(choices)
        )
        self.trace.decisions.append(
            ClassifierDecision("(interjection)", "interjection", mc, index, len(choices))
        )
        if index == len(choices) - 1:
            return None
        return nodes[index].name

    def post_process_transition(self, raw: str, context: NodeSpec, user_reply: str = "", allow_dollar: bool = True):
        """Step 4: turn a raw transition into a concrete node name, popping
        frames for returns. Returns _ReturnSignal when the popped frame has no
        calling node (the apply_fn entry frame)."""
        if is_variable(raw):
            name = raw[1:]
            if not allow_dollar or not _IDENT_RE.match(name):
                raise UnknownNode(f"transition {raw!r} is not a node")
            found, value = self.memory.lookup_variable(name)
            if not found:
                if self.config.undefined_dollar_policy == "literal":
                    raise UnknownNode(f"transition {raw!r} is not a node")
                raise UnknownDollarVariable(f"${name} is not defined")
            rendered = ex.display_value(value)
            return self.post_process_transition(
                rendered, context, user_reply, allow_dollar=False
            )
        m = _RETURN_RE.match(raw)
        if m:
            ident = m.group(1)
            mem = self.memory
            if ident is not None:
                found, value = mem.lookup_variable(ident)
                if not found:
                    raise ex.UnknownName(f"name {ident!r} is not defined")
            else:
                value = mem.top.last_instruction_output
            try:
                popped_vars = dict(mem.top.variables)
                calling, value = mem.pop_frame(value)
            except PopRoot:
                raise ReturnAtRoot("return transition with no open function frame")
            self.trace.last_popped_scope = popped_vars
            if calling is None:
                return _ReturnSignal(value)
            caller = self._node(calling)
            raw_next = self._declared_transition(caller, user_reply)
            return self.post_process_transition(raw_next, caller, user_reply)
        if is_wildcard(raw):
            family = resolve_wildcard_family(self.graph, raw)
            ctx = self._ctx()
            for member in family[:-1]:
                condition = ex.parse_expression(member.boolean_condition)
                if ex.truthiness(ex.evaluate(condition, ctx)):
                    return member.name
            return family[-1].name
        if raw in self.graph.nodes:
            return raw
        raise UnknownNode(f"transition target {raw!r} is not a node")

    # --------------------------------------------------------- instructions

    def apply_instruction(self, node: NodeSpec, user_reply: str = "") -> NodeOutcome:
        """Step 5: execute one node."""
        action = node.action
        if action == ActionKind.TRANSITION:
            return NodeOutcome()
        target, remainder = ex.strip_assignment(node.instruction)
        rendered = self._render(remainder)
        mem = self.memory
        if action in (ActionKind.CHAT, ActionKind.THOUGHT):
            prompt = build_chat_prompt(mem, rendered, self.config, user_reply)
            backend = self.chatbot
            reply = backends_mod.generate(backend, prompt)
            mem.record_turn(
                TurnRecord(
                    node_name=node.name,
                    node_action=action,
                    instruction_rendered=rendered,
                    user_reply=user_reply,
                    model_output=reply.recorded,
                )
            )
            self._stage_output(target, reply.text)
            return NodeOutcome(
                text_output=reply.text,
                value_output=reply.text,
                is_user_facing=(action == ActionKind.CHAT),
            )
        if action == ActionKind.CHAT_EXACT:
            mem.record_turn(
                TurnRecord(
                    node_name=node.name,
                    node_action=action,
                    instruction_rendered=rendered,
                    user_reply=user_reply,
                    model_output=rendered,
                )
            )
            self._stage_output(target, rendered)
            return NodeOutcome(
                text_output=rendered, value_output=rendered, is_user_facing=True
            )
        if action == ActionKind.EXEC_CODE:
            expr = ex.parse_expression(rendered)
            value = ex.evaluate(expr, self._ctx())
            self._stage_output(target, value)
            return NodeOutcome(text_output=ex.display_value(value), value_output=value)
        if action.is_call:
            callee, arg_exprs, kw_exprs = ex.parse_call_instruction(rendered)
            sig = self.graph.callables.get(callee)
            if sig is None:
                raise UnknownCallable(f"no callable node for {callee!r}")
            ctx = self._ctx()
            bound: dict = {}
            for i, arg in enumerate(arg_exprs):
                if i >= len(sig.params):
                    break
                bound[sig.params[i]] = ex.evaluate(arg, ctx)
            for name, value_expr in kw_exprs:
                if name not in sig.params or name in bound:
                    raise ArityMismatch(
                        f"{callee}() got an unexpected or duplicate argument {name!r}"
                    )
                bound[name] = ex.evaluate(value_expr, ctx)
            if len(bound) != len(sig.params) or len(arg_exprs) > len(sig.params):
                raise ArityMismatch(
                    f"{callee} takes {len(sig.params)} arguments, got "
                    f"{len(arg_exprs) + len(kw_exprs)}"
                )
            if target is not None:
                mem.top.pending_assign_target = target
            mem.push_frame(CALL_FRAME_KINDS[action], node.name, bound)
            self.trace.note_depth(mem.depth)
            return NodeOutcome()
        if action == ActionKind.SET_PROMPT:
            mem.current_initial_prompt = rendered
            return NodeOutcome(text_output=rendered, value_output=rendered)
        raise GraphError(f"unhandled action {action!r}")  # unreachable

    def _stage_output(self, target: str | None, value) -> None:
        top = self.memory.top
        top.last_instruction_output = value
        if target is not None:
            top.pending_assign_target = target

    # ------------------------------------------------------------ userbot

    def simulate_user(self) -> SimulatedUser:
        """Sample a transition uniformly and have the userbot write a reply
        from the matching user instruction. Does not advance the session."""
        node = self._node(self.memory.last_node)
        if not node.action.is_chat:
            raise MissingUserPrompts(
                f"node {node.name!r} is not a chat node awaiting a user reply"
            )
        prompts = node.user_instruction_transitions
        if not prompts or len(prompts) != len(node.transitions):
            raise MissingUserPrompts(
                f"node {node.name!r} lacks user_instruction_transitions covering "
                "its transitions"
            )
        index = self.rng.randrange(len(node.transitions))
        instruction = self._render(prompts[index])
        prompt = build_chat_prompt(self.memory, instruction, self.config, "")
        reply = backends_mod.generate(self.userbot, prompt)
        return SimulatedUser(text=reply.text, index=index)
