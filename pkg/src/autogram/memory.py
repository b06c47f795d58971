"""Conversation memory: a stack of frames holding variables and turns.

Frame kinds control visibility and what survives a return:
  root    - the base frame, never popped
  local   - sees only its own variables/turns (bound arguments)
  global  - sees everything below; variables and turns merge into the caller
            when popped
  mixed   - sees everything below; nothing survives the pop except the
            return value
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import CorruptDocument, PopRoot
from .expressions import ExprObject, HostFunction
from .model import ActionKind

MEMORY_VERSION = 1

FRAME_KINDS = ("root", "local", "global", "mixed")


@dataclass
class TurnRecord:
    node_name: str
    node_action: ActionKind
    instruction_rendered: str = ""
    user_reply: str = ""
    model_output: str = ""

    @property
    def is_reply_to_user(self) -> bool:
        return self.node_action.is_chat

    def to_dict(self) -> dict:
        return {
            "node_name": self.node_name,
            "node_action": self.node_action.value,
            "instruction_rendered": self.instruction_rendered,
            "user_reply": self.user_reply,
            "model_output": self.model_output,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TurnRecord":
        return cls(
            node_name=data["node_name"],
            node_action=ActionKind.parse(data["node_action"]),
            instruction_rendered=data.get("instruction_rendered", ""),
            user_reply=data.get("user_reply", ""),
            model_output=data.get("model_output", ""),
        )


@dataclass
class Frame:
    kind: str = "root"
    variables: dict = field(default_factory=dict)
    turns: list[TurnRecord] = field(default_factory=list)
    calling_node: str | None = None
    pending_assign_target: str | None = None
    last_instruction_output: object = None


class MemoryObject:
    def __init__(self):
        self.stack: list[Frame] = [Frame(kind="root")]
        self.visit_log: list[str] = []
        self.last_node: str | None = None
        self.current_initial_prompt: str = ""

    @property
    def top(self) -> Frame:
        return self.stack[-1]

    @property
    def depth(self) -> int:
        return len(self.stack)

    # ------------------------------------------------------------- frames

    def push_frame(self, kind: str, calling_node: str | None, bound: dict) -> Frame:
        if kind not in ("local", "global", "mixed"):
            raise ValueError(f"cannot push a frame of kind {kind!r}")
        frame = Frame(kind=kind, variables=dict(bound), calling_node=calling_node)
        self.stack.append(frame)
        return frame

    def pop_frame(self, return_value) -> tuple[str | None, object]:
        """Pop the top frame, apply its kind's merge rule, and deliver the
        return value to the caller's pending assignment target."""
        if len(self.stack) <= 1:
            raise PopRoot("cannot pop the root frame")
        popped = self.stack.pop()
        caller = self.top
        if popped.kind == "global":
            caller.variables.update(popped.variables)
            caller.turns.extend(popped.turns)
        if caller.pending_assign_target is not None:
            caller.variables[caller.pending_assign_target] = return_value
            caller.pending_assign_target = None
        return popped.calling_node, return_value

    # ---------------------------------------------------------- variables

    def _visible_frames(self) -> list[Frame]:
        """Frames readable from the top, outermost first. A local frame cuts
        off everything below it."""
        visible: list[Frame] = []
        for frame in reversed(self.stack):
            visible.append(frame)
            if frame.kind == "local":
                break
        visible.reverse()
        return visible

    def lookup_variable(self, name: str) -> tuple[bool, object]:
        for frame in reversed(self._visible_frames()):
            if name in frame.variables:
                return True, frame.variables[name]
        return False, None

    # expression-language resolver protocol
    def lookup(self, name: str) -> tuple[bool, object]:
        return self.lookup_variable(name)

    def assign_variable(self, name: str, value) -> None:
        self.top.variables[name] = value

    # -------------------------------------------------------------- turns

    def record_turn(self, turn: TurnRecord) -> None:
        self.top.turns.append(turn)

    def visible_turns(self) -> list[TurnRecord]:
        out: list[TurnRecord] = []
        for frame in self._visible_frames():
            out.extend(frame.turns)
        return out

    # ------------------------------------------------------ serialization

    def serialize(self) -> dict:
        enc = _ValueEncoder()
        return {
            "version": MEMORY_VERSION,
            "stack": [
                {
                    "kind": f.kind,
                    "variables": {k: enc.encode(v) for k, v in f.variables.items()},
                    "turns": [t.to_dict() for t in f.turns],
                    "calling_node": f.calling_node,
                    "pending_assign_target": f.pending_assign_target,
                    "last_instruction_output": enc.encode(f.last_instruction_output),
                }
                for f in self.stack
            ],
            "visit_log": list(self.visit_log),
            "last_node": self.last_node,
            "current_initial_prompt": self.current_initial_prompt,
        }

    def serialize_json(self) -> str:
        return json.dumps(self.serialize(), indent=2)

    @classmethod
    def deserialize(cls, doc: dict, engine_handle: ExprObject | None = None) -> "MemoryObject":
        try:
            version = doc["version"]
            if version != MEMORY_VERSION:
                raise CorruptDocument(f"unsupported memory version {version!r}")
            dec = _ValueDecoder(engine_handle)
            mem = cls()
            stack_doc = doc["stack"]
            if not isinstance(stack_doc, list) or not stack_doc:
                raise CorruptDocument("memory document has no frames")
            mem.stack = []
            for f_doc in stack_doc:
                kind = f_doc["kind"]
                if kind not in FRAME_KINDS:
                    raise CorruptDocument(f"unknown frame kind {kind!r}")
                frame = Frame(
                    kind=kind,
                    variables={
                        k: dec.decode(v) for k, v in f_doc["variables"].items()
                    },
                    turns=[TurnRecord.from_dict(t) for t in f_doc["turns"]],
                    calling_node=f_doc.get("calling_node"),
                    pending_assign_target=f_doc.get("pending_assign_target"),
                    last_instruction_output=dec.decode(
                        f_doc.get("last_instruction_output", {"t": "null", "v": None})
                    ),
                )
                mem.stack.append(frame)
            mem.visit_log = list(doc["visit_log"])
            mem.last_node = doc.get("last_node")
            mem.current_initial_prompt = doc.get("current_initial_prompt", "")
            return mem
        except CorruptDocument:
            raise
        except (KeyError, TypeError, AttributeError, ValueError) as exc:
            raise CorruptDocument(f"bad memory document: {exc}") from exc

    @classmethod
    def deserialize_json(cls, text: str, engine_handle: ExprObject | None = None) -> "MemoryObject":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CorruptDocument(f"memory document is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise CorruptDocument("memory document must be a JSON object")
        return cls.deserialize(doc, engine_handle)

    def structurally_equal(self, other: "MemoryObject") -> bool:
        return self.serialize() == other.serialize()


class _ValueEncoder:
    """Encodes values into {"t": type, "v": payload} envelopes. Shared
    lists/maps are encoded once and referenced afterwards so aliasing
    survives a round trip."""

    def __init__(self):
        self.seen: dict[int, int] = {}
        self.next_ref = 0

    def encode(self, value) -> dict:
        if value is None:
            return {"t": "null", "v": None}
        if isinstance(value, bool):
            return {"t": "bool", "v": value}
        if isinstance(value, int):
            return {"t": "int", "v": value}
        if isinstance(value, float):
            return {"t": "float", "v": value}
        if isinstance(value, str):
            return {"t": "str", "v": value}
        if isinstance(value, list):
            ref = self.seen.get(id(value))
            if ref is not None:
                return {"t": "ref", "v": ref}
            ref = self.next_ref = self.next_ref + 1
            self.seen[id(value)] = ref
            return {"t": "list", "v": {"id": ref, "items": [self.encode(x) for x in value]}}
        if isinstance(value, dict):
            ref = self.seen.get(id(value))
            if ref is not None:
                return {"t": "ref", "v": ref}
            ref = self.next_ref = self.next_ref + 1
            self.seen[id(value)] = ref
            return {
                "t": "map",
                "v": {
                    "id": ref,
                    "items": {k: self.encode(v) for k, v in value.items()},
                },
            }
        if isinstance(value, HostFunction):
            return {"t": "host_function", "v": value.name}
        if isinstance(value, ExprObject):
            return {"t": "engine_handle", "v": None}
        raise CorruptDocument(f"cannot serialize value of type {type(value).__name__}")


class _ValueDecoder:
    def __init__(self, engine_handle: ExprObject | None = None):
        self.engine_handle = engine_handle
        self.refs: dict[int, object] = {}

    def decode(self, env: dict):
        if not isinstance(env, dict) or "t" not in env:
            raise CorruptDocument(f"bad value envelope: {env!r}")
        t = env["t"]
        v = env.get("v")
        if t == "null":
            return None
        if t == "bool":
            return bool(v)
        if t == "int":
            return int(v)
        if t == "float":
            return float(v)
        if t == "str":
            return str(v)
        if t == "ref":
            if v not in self.refs:
                raise CorruptDocument(f"dangling value reference {v!r}")
            return self.refs[v]
        if t == "list":
            out: list = []
            self.refs[v["id"]] = out
            out.extend(self.decode(x) for x in v["items"])
            return out
        if t == "map":
            out_map: dict = {}
            self.refs[v["id"]] = out_map
            for key, item in v["items"].items():
                out_map[key] = self.decode(item)
            return out_map
        if t == "host_function":
            return HostFunction(str(v))
        if t == "engine_handle":
            return self.engine_handle if self.engine_handle is not None else _DetachedHandle()
        raise CorruptDocument(f"unknown value type {t!r}")


class _DetachedHandle(ExprObject):
    """Stands in for the engine handle when a memory document is loaded
    without an attached session."""

    def display(self) -> str:
        return "<engine handle>"
