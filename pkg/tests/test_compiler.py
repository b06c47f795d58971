"""Compiling programs to graphs: conformance against an independent
tree-walking evaluator, frozen scaffold listings, and source-level errors."""

import warnings

import pytest

from autogram.backends import ScriptedBackend
from autogram.compiler import compile_source, parse_program
from autogram.errors import (
    CompileError,
    CompileWarning,
    IndentError,
    MultiAssign,
    NonLiteralKwarg,
    UnknownKwarg,
    UnknownName,
)
from autogram.model import AutogramConfig
from autogram.runtime import Session

from reference_eval import RefError, ReferenceProgram

BIG = AutogramConfig(max_steps=500_000)


def make_session(graph):
    backend = ScriptedBackend(strict=False)
    return Session(graph, chatbot=backend, classifier=backend)


def run_compiled(source, fn, args):
    sess = make_session(compile_source(source, BIG))
    value = sess.apply_fn(fn, list(args))
    return value, sess


# ------------------------------------------------------------- conformance

FIB = """\
def fibonacci(n):
    if n == 1:
        return 0
    elif n == 2:
        return 1
    elif n > 2:
        fib1 = fibonacci(n - 1)
        fib2 = fibonacci(n - 2)
        return fib1 + fib2
    else:
        return 0
"""

MUTUAL = """\
def is_even(n):
    if n == 0:
        return True
    return is_odd(n - 1)

def is_odd(n):
    if n == 0:
        return False
    return is_even(n - 1)
"""

COUNTER = """\
def outer():
    counter = 0
    bump()
    bump()
    return counter

@global_function
def bump():
    counter = counter + 1
"""

PEEK = """\
def outer():
    secret = 5
    r = peek()
    return r

@function
def peek():
    return secret + 1
"""

CORPUS = [
    ("add", "def add(a, b):\n    return a + b\n", "add", [3, 4]),
    ("add_strings", "def add(a, b):\n    return a + b\n", "add", ["ab", "cd"]),
    ("fib_small", FIB, "fibonacci", [7]),
    ("fib_zero", FIB, "fibonacci", [0]),
    (
        "factorial",
        "def fact(n):\n    if n <= 1:\n        return 1\n    return n * fact(n - 1)\n",
        "fact",
        [8],
    ),
    (
        "gcd",
        "def gcd(a, b):\n"
        "    while b != 0:\n"
        "        t = b\n"
        "        b = a % b\n"
        "        a = t\n"
        "    return a\n",
        "gcd",
        [48, 18],
    ),
    (
        "sum_list",
        "def total(xs):\n    s = 0\n    for x in xs:\n        s = s + x\n    return s\n",
        "total",
        [[1, 2, 3, 4]],
    ),
    (
        "sum_empty",
        "def total(xs):\n    s = 0\n    for x in xs:\n        s = s + x\n    return s\n",
        "total",
        [[]],
    ),
    (
        "square_sum",
        "def sq(n):\n"
        "    s = 0\n"
        "    for i in range(1, n + 1):\n"
        "        s = s + i * i\n"
        "    return s\n",
        "sq",
        [10],
    ),
    (
        "grade_nested",
        "def grade(score):\n"
        "    if score >= 90:\n"
        "        if score >= 97:\n"
        "            return 'A+'\n"
        "        return 'A'\n"
        "    elif score >= 80:\n"
        "        return 'B'\n"
        "    elif score >= 70:\n"
        "        return 'C'\n"
        "    else:\n"
        "        return 'F'\n",
        "grade",
        [92],
    ),
    (
        "shout_join",
        "def shout(words):\n"
        "    out = []\n"
        "    for w in words:\n"
        "        out.append(w.upper())\n"
        "    return ' '.join(out)\n",
        "shout",
        [["hey", "you"]],
    ),
    (
        "list_juggle",
        "def juggle():\n"
        "    xs = [1, 2, 3]\n"
        "    xs.append(4)\n"
        "    xs.insert(0, 0)\n"
        "    xs.remove(2)\n"
        "    top = xs.pop()\n"
        "    return [xs, top, xs.index(3)]\n",
        "juggle",
        [],
    ),
    ("mutual_recursion", MUTUAL, "is_even", [7]),
    ("mutual_recursion_even", MUTUAL, "is_even", [10]),
    (
        "power_squaring",
        "def power(base, exp):\n"
        "    if exp == 0:\n"
        "        return 1\n"
        "    half = power(base, exp // 2)\n"
        "    if exp % 2 == 0:\n"
        "        return half * half\n"
        "    return half * half * base\n",
        "power",
        [2, 10],
    ),
    (
        "collatz",
        "def collatz(n):\n"
        "    steps = 0\n"
        "    while n != 1:\n"
        "        if n % 2 == 0:\n"
        "            n = n // 2\n"
        "        else:\n"
        "            n = 3 * n + 1\n"
        "        steps = steps + 1\n"
        "    return steps\n",
        "collatz",
        [27],
    ),
    (
        "fizz_label",
        "def label(n):\n"
        "    if n % 15 == 0:\n"
        "        return 'fizzbuzz'\n"
        "    elif n % 3 == 0:\n"
        "        return 'fizz'\n"
        "    elif n % 5 == 0:\n"
        "        return 'buzz'\n"
        "    return str(n)\n",
        "label",
        [9],
    ),
    (
        "nested_loops",
        "def table(n):\n"
        "    total = 0\n"
        "    for i in range(1, n + 1):\n"
        "        for j in range(1, n + 1):\n"
        "            total = total + i * j\n"
        "    return total\n",
        "table",
        [4],
    ),
    ("global_counter", COUNTER, "outer", []),
    ("mixed_peek", PEEK, "outer", []),
    (
        "find_index",
        "def find(xs, needle):\n"
        "    i = 0\n"
        "    while i < len(xs):\n"
        "        if xs[i] == needle:\n"
        "            return i\n"
        "        i = i + 1\n"
        "    return 0 - 1\n",
        "find",
        [[3, 5, 7], 5],
    ),
    (
        "find_missing",
        "def find(xs, needle):\n"
        "    i = 0\n"
        "    while i < len(xs):\n"
        "        if xs[i] == needle:\n"
        "            return i\n"
        "        i = i + 1\n"
        "    return 0 - 1\n",
        "find",
        [[1], 2],
    ),
    (
        "max_of_list",
        "def biggest(xs):\n"
        "    best = xs[0]\n"
        "    for x in xs:\n"
        "        if x > best:\n"
        "            best = x\n"
        "    return best\n",
        "biggest",
        [[-4, -9, -1]],
    ),
    (
        "vowel_count",
        "def vowels(s):\n"
        "    n = 0\n"
        "    for ch in s:\n"
        "        if ch == 'a' or ch == 'e' or ch == 'i' or ch == 'o' or ch == 'u':\n"
        "            n = n + 1\n"
        "    return n\n",
        "vowels",
        ["alphabet soup"],
    ),
    (
        "middle_slice",
        "def mid(xs):\n    return xs[1:len(xs) - 1]\n",
        "mid",
        [[1, 2, 3, 4]],
    ),
    (
        "repeat_join",
        "def rj(word, n):\n"
        "    parts = []\n"
        "    i = 0\n"
        "    while i < n:\n"
        "        parts.append(word)\n"
        "        i = i + 1\n"
        "    return '-'.join(parts)\n",
        "rj",
        ["ab", 3],
    ),
    (
        "bool_logic",
        "def inside(x, lo, hi):\n"
        "    ok = x >= lo and x <= hi\n"
        "    if not ok or x == lo:\n"
        "        return ok\n"
        "    return not ok\n",
        "inside",
        [5, 1, 9],
    ),
]


@pytest.mark.parametrize(
    "source, fn, args", [c[1:] for c in CORPUS], ids=[c[0] for c in CORPUS]
)
def test_compiled_function_matches_reference(source, fn, args):
    expected = ReferenceProgram(source).run_function(fn, list(args), kind="local")
    got, _ = run_compiled(source, fn, args)
    assert got == expected
    assert isinstance(got, bool) == isinstance(expected, bool)


@pytest.mark.parametrize("n", range(1, 11))
def test_fibonacci_values(n):
    got, _ = run_compiled(FIB, "fibonacci", [n])
    assert got == ReferenceProgram(FIB).run_function("fibonacci", [n], kind="local")


def test_fibonacci_fifteen():
    got, _ = run_compiled(FIB, "fibonacci", [15])
    assert got == 377


def test_fibonacci_recursion_depth():
    ref = ReferenceProgram(FIB)
    ref.run_function("fibonacci", [10], kind="local")
    _, sess = run_compiled(FIB, "fibonacci", [10])
    assert ref.max_depth == 9
    assert sess.trace.max_fn_depth == ref.max_depth


def test_mutual_recursion_depth():
    ref = ReferenceProgram(MUTUAL)
    ref.run_function("is_even", [10], kind="local")
    _, sess = run_compiled(MUTUAL, "is_even", [10])
    assert ref.max_depth == 11
    assert sess.trace.max_fn_depth == ref.max_depth


def test_local_function_cannot_see_caller():
    source = (
        "def outer():\n"
        "    hidden = 1\n"
        "    return probe()\n"
        "\n"
        "def probe():\n"
        "    return hidden\n"
    )
    with pytest.raises(RefError):
        ReferenceProgram(source).run_function("outer", [], kind="local")
    sess = make_session(compile_source(source, BIG))
    with pytest.raises(UnknownName):
        sess.apply_fn("outer", [])


TERMINAL = (
    "exec_node(action='chat_exact', instruction='done', "
    "name='finish', transitions=['finish'])\n"
)

TOP_CORPUS = [
    (
        "straight_line",
        "a = 2\n"
        "b = 3\n"
        "c = a * b + 1\n"
        "words = ['x', 'y']\n"
        "words.append('z')\n"
        "joined = ''.join(words)\n",
    ),
    (
        "call_in_loop",
        "def double(v):\n"
        "    return v * 2\n"
        "\n"
        "total = 0\n"
        "for k in range(0, 4):\n"
        "    total = total + double(k)\n"
        "flag = total == 12\n",
    ),
    (
        "top_while_conditional",
        "n = 10\n"
        "count = 0\n"
        "while n > 1:\n"
        "    if n % 2 == 0:\n"
        "        n = n // 2\n"
        "    else:\n"
        "        n = 3 * n + 1\n"
        "    count = count + 1\n"
        "done = 'yes'\n",
    ),
]


@pytest.mark.parametrize(
    "source", [c[1] for c in TOP_CORPUS], ids=[c[0] for c in TOP_CORPUS]
)
def test_top_level_matches_reference(source):
    expected = ReferenceProgram(source).run_top()
    sess = make_session(compile_source(source + TERMINAL, BIG))
    assert sess.reply("") == "done"
    got = {
        k: v
        for k, v in sess.memory.top.variables.items()
        if not k.startswith("_")
    }
    assert got == expected


# ------------------------------------------------------------- scaffolds


def listing(graph):
    return [
        (n.name, n.action.value, n.instruction, list(n.transitions), n.boolean_condition)
        for n in graph.nodes.values()
    ]


def test_fibonacci_scaffold_is_stable():
    graph = compile_source(FIB)
    assert graph.start_node == "fibonacci(n)"
    assert listing(graph) == [
        ("fibonacci(n)", "transition", "", ["_fibonacci_conditional1.*"], ""),
        ("_fibonacci_conditional1.a", "transition", "", ["_fibonacci_conditional1_node1"], "n == 1"),
        ("_fibonacci_conditional1_node1", "python_function", "0", ["_fibonacci_conditional1_node2"], ""),
        ("_fibonacci_conditional1_node2", "transition", "", ["return"], ""),
        ("_fibonacci_conditional1.b", "transition", "", ["_fibonacci_conditional1_node3"], "n == 2"),
        ("_fibonacci_conditional1_node3", "python_function", "1", ["_fibonacci_conditional1_node4"], ""),
        ("_fibonacci_conditional1_node4", "transition", "", ["return"], ""),
        ("_fibonacci_conditional1.c", "transition", "", ["_fibonacci_conditional1_node5"], "n > 2"),
        ("_fibonacci_conditional1_node5", "local_function", "fib1 = fibonacci(n - 1)", ["_fibonacci_conditional1_node6"], ""),
        ("_fibonacci_conditional1_node6", "local_function", "fib2 = fibonacci(n - 2)", ["_fibonacci_conditional1_node7"], ""),
        ("_fibonacci_conditional1_node7", "python_function", "fib1 + fib2", ["_fibonacci_conditional1_node8"], ""),
        ("_fibonacci_conditional1_node8", "transition", "", ["return"], ""),
        ("_fibonacci_conditional1.d", "transition", "", ["_fibonacci_conditional1_node9"], ""),
        ("_fibonacci_conditional1_node9", "python_function", "0", ["_fibonacci_conditional1_node10"], ""),
        ("_fibonacci_conditional1_node10", "transition", "", ["return"], ""),
    ]


def test_for_loop_scaffold():
    source = (
        "def total(xs):\n"
        "    s = 0\n"
        "    for x in xs:\n"
        "        s = s + x\n"
        "    return s\n"
    )
    graph = compile_source(source)
    assert listing(graph) == [
        ("total(xs)", "transition", "", ["_total_node2"], ""),
        ("_total_node2", "python_function", "s = 0", ["_total_forloop1_init"], ""),
        ("_total_forloop1_init", "python_function", "_total_forloop1_i = 0", ["_total_forloop1_start"], ""),
        ("_total_forloop1_start", "transition", "", ["_total_forloop1.*"], ""),
        ("_total_forloop1.a", "transition", "", ["_total_node3"], "_total_forloop1_i == len(xs)"),
        ("_total_forloop1.b", "transition", "", ["_total_forloop1_extract"], ""),
        ("_total_forloop1_extract", "python_function", "x = xs[_total_forloop1_i]", ["_total_forloop1_node1"], ""),
        ("_total_forloop1_node1", "python_function", "s = s + x", ["_total_forloop1_inc"], ""),
        ("_total_forloop1_inc", "python_function", "_total_forloop1_i = _total_forloop1_i + 1", ["_total_forloop1.*"], ""),
        ("_total_node3", "transition", "", ["return s"], ""),
    ]


def test_top_level_conditional_attaches_to_predecessor():
    source = "x = 1\nif x > 0:\n    y = 2\nelse:\n    y = 3\nz = y + x\n"
    graph = compile_source(source)
    assert graph.start_node == "_node1"
    assert listing(graph) == [
        ("_node1", "python_function", "x = 1", ["_conditional1.*"], ""),
        ("_conditional1.a", "transition", "", ["_conditional1_node1"], "x > 0"),
        ("_conditional1_node1", "python_function", "y = 2", ["_node2"], ""),
        ("_conditional1.b", "transition", "", ["_conditional1_node2"], ""),
        ("_conditional1_node2", "python_function", "y = 3", ["_node2"], ""),
        ("_node2", "python_function", "z = y + x", [], ""),
    ]


def test_conditional_without_predecessor_synthesizes_start():
    source = "if 1 > 0:\n    y = 2\nelse:\n    y = 3\n"
    graph = compile_source(source)
    names = list(graph.nodes)
    assert names[0] == "_conditional1_start"
    assert graph.nodes["_conditional1_start"].transitions == ["_conditional1.*"]


def test_while_scaffold_and_self_reference_names():
    import importlib.resources as res

    source = (res.files("autogram") / "data" / "self_ref.auto").read_text()
    graph = compile_source(source)
    assert list(graph.nodes) == [
        "_node1",
        "intro",
        "make_node",
        "add_new_node(last_name)",
        "_add_new_node_node2",
        "_add_new_node_node3",
        "_add_new_node_whileloop1_start",
        "_add_new_node_whileloop1.a",
        "_add_new_node_whileloop1_node1",
        "_add_new_node_whileloop1.b",
        "_add_new_node_node4",
        "_add_new_node_node5",
    ]
    loop_head = graph.nodes["_add_new_node_whileloop1.a"]
    assert loop_head.boolean_condition == "not meta_utils.check_node_name(new_name)"
    # the loop body jumps straight back to the wildcard
    body = graph.nodes["_add_new_node_whileloop1_node1"]
    assert body.transitions == ["_add_new_node_whileloop1.*"]
    assert graph.nodes["_add_new_node_node5"].transitions == ["return new_name"]
    assert graph.callables["add_new_node"].node_name == "add_new_node(last_name)"


def test_exec_node_keeps_name_and_folds_assignment():
    source = (
        "greeting = exec_node(action='chat_exact', instruction='Hello there.', "
        "transitions=['welcome'], name='welcome')\n"
    )
    graph = compile_source(source)
    node = graph.nodes["welcome"]
    assert node.action.value == "chat_exact"
    assert node.instruction == "greeting = Hello there."
    assert node.transitions == ["welcome"]


def test_decorators_set_call_actions():
    source = (
        "def plain():\n"
        "    return 1\n"
        "\n"
        "@global_function\n"
        "def shared():\n"
        "    return 2\n"
        "\n"
        "@function\n"
        "def looker():\n"
        "    return 3\n"
        "\n"
        "a = plain()\n"
        "b = shared()\n"
        "c = looker()\n"
    )
    graph = compile_source(source)
    actions = {
        n.instruction: n.action.value
        for n in graph.nodes.values()
        if n.action.is_call
    }
    assert actions == {
        "a = plain()": "local_function",
        "b = shared()": "global_function",
        "c = looker()": "function",
    }


def test_call_argument_decomposition_uses_temps():
    source = (
        "def double(v):\n"
        "    return v * 2\n"
        "\n"
        "x = double(double(3)) + 1\n"
    )
    graph = compile_source(source)
    calls = [n for n in graph.nodes.values() if n.action.is_call]
    assert [c.instruction for c in calls] == [
        "_tmp1 = double(3)",
        "_tmp2 = double(_tmp1)",
    ]
    sess = make_session(compile_source(source + TERMINAL, BIG))
    sess.reply("")
    assert sess.memory.top.variables["x"] == ReferenceProgram(source).run_top()["x"]


def test_top_level_is_lowered_before_functions():
    source = "def f():\n    return 1\n\nx = f()\n"
    graph = compile_source(source)
    assert graph.start_node == "_node1"
    assert list(graph.nodes)[0] == "_node1"


def test_compile_is_deterministic():
    a = compile_source(FIB)
    b = compile_source(FIB)
    assert {n: s.to_dict() for n, s in a.nodes.items()} == {
        n: s.to_dict() for n, s in b.nodes.items()
    }


# ------------------------------------------------------------- errors


def test_tab_indentation_rejected():
    with pytest.raises(IndentError):
        parse_program("def f():\n\tx = 1\n")


def test_bad_dedent_rejected():
    with pytest.raises(IndentError):
        parse_program("def f():\n    if 1 > 0:\n        x = 1\n   y = 2\n")


def test_chained_assignment_rejected():
    with pytest.raises(MultiAssign):
        compile_source("x = y = 1\n")


def test_elif_after_else_rejected():
    source = (
        "if 1 > 0:\n"
        "    y = 1\n"
        "else:\n"
        "    y = 2\n"
        "elif 2 > 1:\n"
        "    y = 3\n"
    )
    with pytest.raises(CompileError):
        parse_program(source)


def test_exec_node_unknown_field():
    with pytest.raises(UnknownKwarg):
        compile_source("exec_node(action='chat', instruction='hi', wattage='9')\n")


def test_exec_node_non_literal_field():
    with pytest.raises(NonLiteralKwarg):
        compile_source("exec_node(action='chat', instruction=1 + 2)\n")


def test_exec_node_requires_action():
    with pytest.raises(CompileError):
        compile_source("exec_node(instruction='hi')\n")


def test_decorator_must_precede_def():
    with pytest.raises(CompileError):
        parse_program("@global_function\nx = 1\n")


def test_empty_program_warns():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        graph = compile_source("# nothing here\n")
    assert any(issubclass(w.category, CompileWarning) for w in caught)
    assert graph.nodes == {}
