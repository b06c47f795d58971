"""Spreadsheet and config loading, the exported graph document, and the
bundled example files."""

import json

import pytest

from autogram.authoring import (
    bundled_examples,
    config_from_dict,
    config_to_dict,
    export_graph_document,
    import_graph_document,
    load_config,
    load_csv,
    load_csv_text,
    load_graph,
    save_csv,
)
from autogram.backends import ScriptedBackend
from autogram.compiler import compile_source
from autogram.errors import (
    AuthoringError,
    ConfigParseError,
    RowParseError,
    UnknownHeader,
)
from autogram.model import AutogramConfig, GraphModel, NodeSpec, validate_graph

# ------------------------------------------------------------------- csv


def test_csv_newline_list_cells():
    text = (
        "name,action,instruction,transitions\n"
        'start,chat_exact,hi,"a\nb"\n'
        "a,chat_exact,one,start\n"
        "b,chat_exact,two,start\n"
    )
    graph = load_csv_text(text)
    assert graph.nodes["start"].transitions == ["a", "b"]
    assert graph.start_node == "start"


def test_csv_bracket_list_cells():
    text = (
        "name,action,instruction,transitions\n"
        "start,chat_exact,hi,\"['a', 'b']\"\n"
        "a,chat_exact,one,start\n"
        "b,chat_exact,two,start\n"
    )
    graph = load_csv_text(text)
    assert graph.nodes["start"].transitions == ["a", "b"]


def test_csv_bad_bracket_literal():
    text = "name,action,transitions\nstart,chat_exact,\"['a',\"\n"
    with pytest.raises(RowParseError):
        load_csv_text(text)


def test_csv_bracket_literal_must_hold_strings():
    text = "name,action,transitions\nstart,chat_exact,\"[1, 2]\"\n"
    with pytest.raises(RowParseError):
        load_csv_text(text)


def test_csv_misspelled_header_suggests():
    text = "name,action,transitons\nstart,chat_exact,start\n"
    with pytest.raises(UnknownHeader) as exc_info:
        load_csv_text(text)
    assert "transitions" in str(exc_info.value)


def test_csv_unrelated_header_becomes_extra():
    text = (
        "name,action,instruction,transitions,owner_team\n"
        "start,chat_exact,hi,start,growth\n"
    )
    graph = load_csv_text(text)
    assert graph.nodes["start"].extra == {"owner_team": "growth"}


def test_csv_row_without_name():
    text = "name,action,transitions\n,chat_exact,x\n"
    with pytest.raises(RowParseError) as exc_info:
        load_csv_text(text)
    assert exc_info.value.row == 2


def test_csv_row_without_action():
    text = "name,action,transitions\nstart,,x\n"
    with pytest.raises(RowParseError):
        load_csv_text(text)


def test_csv_blank_rows_skipped():
    text = (
        "name,action,instruction,transitions\n"
        "\n"
        "start,chat_exact,hi,start\n"
        ",,,\n"
    )
    graph = load_csv_text(text)
    assert list(graph.nodes) == ["start"]


def test_csv_save_load_round_trip(tmp_path):
    graph = GraphModel()
    graph.add_node(
        NodeSpec.from_dict(
            {
                "name": "ask",
                "action": "chat",
                "instruction": "Ask the user.",
                "transitions": ["left", "right"],
                "transition_question": "Which way?",
                "transition_choices": ["Left.", "Right."],
                "user_instruction_transitions": ["Go left.", "Go\nright."],
                "category": "intake",
            }
        )
    )
    graph.add_node(
        NodeSpec.from_dict(
            {"name": "left", "action": "chat_exact", "instruction": "L", "transitions": ["ask"]}
        )
    )
    graph.add_node(
        NodeSpec.from_dict(
            {"name": "right", "action": "chat_exact", "instruction": "R", "transitions": ["ask"]}
        )
    )
    path = tmp_path / "graph.csv"
    save_csv(graph, path)
    loaded = load_csv(path)
    assert {n: s.to_dict() for n, s in loaded.nodes.items()} == {
        n: s.to_dict() for n, s in graph.nodes.items()
    }
    # the newline inside a list member forces the bracket representation
    raw = path.read_text()
    assert "['Go left.', 'Go\\nright.']" in raw


# ---------------------------------------------------------------- config


def test_config_from_dict_full():
    config = config_from_dict(
        {
            "agent_name": "Tutor",
            "self_referential": True,
            "max_steps": 50,
            "chatbot": {"mode": "http", "endpoint": "http://x/v1", "model": "m"},
        }
    )
    assert config.agent_name == "Tutor"
    assert config.self_referential is True
    assert config.chatbot.mode == "http"
    assert config.classifier.mode == "scripted"


def test_config_unknown_key_suggests():
    with pytest.raises(ConfigParseError) as exc_info:
        config_from_dict({"agent_nme": "X"})
    assert "agent_name" in str(exc_info.value)


def test_config_backend_unknown_key():
    with pytest.raises(ConfigParseError):
        config_from_dict({"chatbot": {"mode": "scripted", "port": 1}})


def test_config_backend_must_be_object():
    with pytest.raises(ConfigParseError):
        config_from_dict({"chatbot": "scripted"})


def test_config_bad_enum_rejected():
    with pytest.raises(Exception):
        config_from_dict({"undefined_dollar_policy": "maybe"})


def test_config_round_trip():
    config = config_from_dict({"agent_name": "A", "max_steps": 7})
    again = config_from_dict(config_to_dict(config))
    assert again == config


def test_load_config_rejects_bad_json(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json")
    with pytest.raises(ConfigParseError):
        load_config(path)


# ------------------------------------------------------------- documents


def edges_of(doc, kind):
    return [(e["from"], e["to"], e["label"]) for e in doc["edges"] if e["kind"] == kind]


def test_export_standard_and_classifier_edges():
    graph = load_csv_text(
        "name,action,instruction,transitions,transition_question,transition_choices\n"
        'ask,chat_exact,Pick.,"a\nb",Which?,"X.\nY."\n'
        "a,chat_exact,one,ask,,\n"
        "b,chat_exact,two,ask,,\n"
    )
    doc = export_graph_document(graph)
    assert doc["version"] == 1
    assert doc["start_node"] == "ask"
    assert ("ask", "a", "") in edges_of(doc, "standard")
    assert ("ask", "b", "") in edges_of(doc, "standard")


def test_export_call_and_return_edges():
    source = (
        "def double(v):\n"
        "    return v * 2\n"
        "\n"
        "x = double(4)\n"
    )
    doc = export_graph_document(compile_source(source))
    assert edges_of(doc, "function_call") == [("_node1", "double(v)", "double")]
    returns = edges_of(doc, "return")
    assert returns == [("_double_node3", "return(double)", "return")]
    assert doc["callables"] == {"double": "double(v)"}


def test_export_wildcard_edges_carry_conditions():
    source = "x = 1\nif x > 0:\n    y = 2\nelse:\n    y = 3\n"
    doc = export_graph_document(compile_source(source))
    assert edges_of(doc, "wildcard") == [
        ("_node1", "_conditional1.a", "x > 0"),
        ("_node1", "_conditional1.b", "else"),
    ]


def test_export_variable_edges():
    graph = GraphModel(AutogramConfig(self_referential=True))
    graph.add_node(
        NodeSpec.from_dict(
            {"name": "jump", "action": "transition", "transitions": ["$next_node"]}
        )
    )
    doc = export_graph_document(graph)
    assert edges_of(doc, "variable") == [("jump", "$next_node", "$next_node")]


def test_export_interjection_edges():
    path = bundled_examples()["tutor_bot"]
    doc = export_graph_document(load_graph(path))
    hits = edges_of(doc, "interjection")
    chat_nodes = {e[0] for e in hits}
    assert all(e[1] == "check_questions" for e in hits)
    assert "ask_question" in chat_nodes
    assert all(
        e[2] == "The student asked an unrelated question that should be answered first."
        for e in hits
    )


def test_document_import_round_trip():
    path = bundled_examples()["tutor_bot"]
    graph = load_graph(path)
    doc = export_graph_document(graph)
    again = import_graph_document(json.loads(json.dumps(doc)))
    assert {n: s.to_dict() for n, s in again.nodes.items()} == {
        n: s.to_dict() for n, s in graph.nodes.items()
    }
    assert again.start_node == graph.start_node


def test_document_import_respects_start_override():
    graph = load_csv_text(
        "name,action,instruction,transitions\n"
        "a,chat_exact,one,a\n"
        "b,chat_exact,two,b\n"
    )
    doc = export_graph_document(graph)
    doc["start_node"] = "b"
    assert import_graph_document(doc).start_node == "b"


def test_document_import_rejects_bad_versions():
    with pytest.raises(AuthoringError):
        import_graph_document({"version": 99, "nodes": []})
    with pytest.raises(AuthoringError):
        import_graph_document({"pets": []})


# -------------------------------------------------------------- examples


GRAPH_EXAMPLES = ["tutor_bot", "summarize", "fibonacci", "self_ref"]


@pytest.mark.parametrize("stem", GRAPH_EXAMPLES)
def test_bundled_graphs_load_and_validate(stem):
    examples = bundled_examples()
    config = None
    if stem == "self_ref":
        config = load_config(examples["self_ref_config"])
    graph = load_graph(examples[stem], config)
    assert graph.nodes
    problems = [d for d in validate_graph(graph) if d.severity == "error"]
    assert problems == []


def test_bundled_fixtures_parse():
    examples = bundled_examples()
    for stem in ("tutor_fixture", "self_ref_fixture"):
        doc = json.loads(examples[stem].read_text())
        backend = ScriptedBackend.from_fixture(doc)
        assert backend.rules or backend.responses


def test_load_graph_dispatches_on_extension(tmp_path):
    program = tmp_path / "prog.auto"
    program.write_text("def f():\n    return 1\n")
    graph = load_graph(program)
    assert "f()" in graph.nodes

    doc_path = tmp_path / "graph.json"
    doc_path.write_text(json.dumps(export_graph_document(graph)))
    assert "f()" in load_graph(doc_path).nodes
