"""Prompt assembly for the chat model and the transition classifier.

Chat prompts are alternating input/output histories rebuilt from recorded
turns. Which part of a past turn appears in its input depends on the node
kind and on whether the turn came right after a user reply:

  thought, after a user reply -> instruction and user reply
  thought, otherwise          -> instruction only
  chat, after a user reply    -> the user reply only (instruction dropped)
  chat, otherwise             -> instruction

The final input is produced from the instruction template; the last user
reply goes into it only when no earlier input in the prompt already carries
it. The initial prompt is pre-appended to the first input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TooManyChoices
from .memory import MemoryObject, TurnRecord
from .model import MAX_CHOICES, AutogramConfig

LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass
class ChatPrompt:
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)  # len(inputs) - 1
    reply_start: str = ""
    start_type: str = "suffix"

    def render_text(self) -> str:
        lines: list[str] = []
        for i, inp in enumerate(self.inputs):
            lines.append(inp)
            if i < len(self.outputs):
                lines.append(self.outputs[i])
        return "\n".join(lines)


@dataclass
class ClassifierPrompt:
    history_text: str
    mc_text: str
    num_choices: int

    def render_text(self) -> str:
        if self.history_text:
            return f"{self.history_text}\n{self.mc_text}"
        return self.mc_text


def _turn_pairs(turns: list[TurnRecord]) -> tuple[list[str], list[str]]:
    """Past input/output pairs per the rule matrix above. Only model turns
    (chat, chat_exact, thought) contribute."""
    inputs: list[str] = []
    outputs: list[str] = []
    for turn in turns:
        if not turn.node_action.records_turn:
            continue
        if turn.node_action.is_chat:
            if turn.user_reply:
                inputs.append(turn.user_reply)
            else:
                inputs.append(turn.instruction_rendered)
        else:  # thought
            if turn.user_reply:
                inputs.append(f"{turn.instruction_rendered} {turn.user_reply}")
            else:
                inputs.append(turn.instruction_rendered)
        outputs.append(turn.model_output)
    return inputs, outputs


def _consumed(turns: list[TurnRecord], user_reply: str) -> bool:
    return bool(user_reply) and any(
        t.user_reply == user_reply for t in turns if t.node_action.records_turn
    )


def build_chat_prompt(
    memory: MemoryObject,
    instruction: str,
    config: AutogramConfig,
    user_reply: str = "",
) -> ChatPrompt:
    """Assemble the chat prompt for executing a node whose rendered
    instruction is ``instruction``. ``user_reply`` is the latest user reply;
    it is placed in the final input unless a visible past turn already
    carries it."""
    turns = memory.visible_turns()
    inputs, outputs = _turn_pairs(turns)
    last_response = "" if _consumed(turns, user_reply) else user_reply
    final = (
        config.instruction_template.replace("<last_response>", last_response)
        .replace("<agent_name>", config.agent_name)
        .replace("<instruction>", instruction)
        .strip()
    )
    inputs.append(final)
    if memory.current_initial_prompt:
        inputs[0] = f"{memory.current_initial_prompt}\n{inputs[0]}"
    return ChatPrompt(
        inputs=inputs,
        outputs=outputs,
        reply_start=config.reply_start,
        start_type=config.reply_start_type,
    )


def format_mc(question: str, choices: list[str]) -> str:
    """The multiple-choice text shown to the classifier:
    ``<question> A. <c1> B. <c2> ...``"""
    if len(choices) > MAX_CHOICES:
        raise TooManyChoices(
            f"{len(choices)} choices; the classifier supports at most {MAX_CHOICES}"
        )
    parts = [question] + [f"{LETTERS[i]}. {c}" for i, c in enumerate(choices)]
    return " ".join(parts)


def build_classifier_prompt(
    memory: MemoryObject,
    mc_text: str,
    num_choices: int,
    user_reply: str = "",
) -> ClassifierPrompt:
    """The classifier sees the whole visible history concatenated into a
    single turn, with the pending user reply last."""
    turns = memory.visible_turns()
    inputs, outputs = _turn_pairs(turns)
    lines: list[str] = []
    for i, inp in enumerate(inputs):
        lines.append(inp)
        if i < len(outputs):
            lines.append(outputs[i])
    if user_reply and not _consumed(turns, user_reply):
        lines.append(user_reply)
    history = "\n".join(lines)
    if memory.current_initial_prompt:
        history = (
            f"{memory.current_initial_prompt}\n{history}"
            if history
            else memory.current_initial_prompt
        )
    return ClassifierPrompt(history_text=history, mc_text=mc_text, num_choices=num_choices)
