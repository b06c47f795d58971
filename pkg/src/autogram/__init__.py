"""Graph-structured agent programs: author them as spreadsheets or
python-like programs, run them against scripted or HTTP chat models, and let
them call, loop, branch, and extend themselves mid-conversation."""

from . import errors
from .authoring import (
    bundled_examples,
    config_from_dict,
    examples_dir,
    export_graph_document,
    import_graph_document,
    load_config,
    load_csv,
    load_csv_text,
    load_graph,
    save_csv,
)
from .backends import (
    HttpBackend,
    LlmBackend,
    ScriptedBackend,
    backend_from_settings,
)
from .compiler import CompileUnit, compile_source, compile_unit, parse_program
from .errors import AutogramError
from .memory import Frame, MemoryObject, TurnRecord
from .model import (
    ActionKind,
    AutogramConfig,
    BackendSettings,
    CallableSignature,
    Diagnostic,
    GraphModel,
    NodeSpec,
    parse_callable_name,
    validate_graph,
)
from .prompts import ChatPrompt, ClassifierPrompt, build_chat_prompt, build_classifier_prompt, format_mc
from .runtime import Session, SimulatedUser, Trace, check_node_name, default_host_registry

__version__ = "0.1.0"

__all__ = [
    "ActionKind",
    "AutogramConfig",
    "AutogramError",
    "BackendSettings",
    "CallableSignature",
    "ChatPrompt",
    "ClassifierPrompt",
    "CompileUnit",
    "Diagnostic",
    "Frame",
    "GraphModel",
    "HttpBackend",
    "LlmBackend",
    "MemoryObject",
    "NodeSpec",
    "ScriptedBackend",
    "Session",
    "SimulatedUser",
    "Trace",
    "TurnRecord",
    "backend_from_settings",
    "build_chat_prompt",
    "build_classifier_prompt",
    "bundled_examples",
    "check_node_name",
    "compile_source",
    "compile_unit",
    "config_from_dict",
    "default_host_registry",
    "errors",
    "examples_dir",
    "export_graph_document",
    "format_mc",
    "import_graph_document",
    "load_config",
    "load_csv",
    "load_csv_text",
    "load_graph",
    "parse_callable_name",
    "parse_program",
    "save_csv",
    "validate_graph",
    "__version__",
]
