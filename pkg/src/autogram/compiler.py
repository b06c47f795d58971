"""Compiles python-like agent programs into graphs.

Statements become exec nodes, calls to defined functions become call-kind
nodes, conditionals become wildcard families, and loops become check/body
scaffolds with back-edges. Auto-generated names start with ``_`` and carry a
per-chain counter; every node lowered into a chain consumes its chain's
counter for its construct, so explicit names still advance the numbering.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field

from . import expressions as ex
from .errors import (
    CompileError,
    CompileWarning,
    IndentError,
    MultiAssign,
    NonLiteralKwarg,
    ParseError,
    UnknownKwarg,
)
from .model import ActionKind, AutogramConfig, GraphModel, NodeSpec

# ----------------------------------------------------------------- statements


@dataclass
class Stmt:
    line: int = 0


@dataclass
class FuncDef(Stmt):
    name: str = ""
    params: list[str] = field(default_factory=list)
    kind: ActionKind = ActionKind.CALL_LOCAL
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Branch:
    condition_src: str | None  # None for else
    body: list[Stmt] = field(default_factory=list)


@dataclass
class IfChain(Stmt):
    branches: list[Branch] = field(default_factory=list)


@dataclass
class While(Stmt):
    condition_src: str = ""
    body: list[Stmt] = field(default_factory=list)


@dataclass
class For(Stmt):
    target: str = ""
    iterable_src: str = ""
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Return(Stmt):
    expr: ex.Expr | None = None


@dataclass
class Assign(Stmt):
    target: str = ""
    expr: ex.Expr | None = None
    source: str = ""


@dataclass
class ExprStmt(Stmt):
    expr: ex.Expr | None = None
    source: str = ""


@dataclass
class ExecNode(Stmt):
    assign_target: str | None = None
    fields: dict = field(default_factory=dict)  # literal NodeSpec fields


@dataclass
class CompileUnit:
    body: list[Stmt] = field(default_factory=list)

    @property
    def functions(self) -> list[FuncDef]:
        return [s for s in self.body if isinstance(s, FuncDef)]


# -------------------------------------------------------------- line scanning


def _strip_comment(line: str) -> str:
    out = []
    quote = None
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\":
                out.append(line[i : i + 2])
                i += 2
                continue
            if ch == quote:
                quote = None
            out.append(ch)
        else:
            if ch == "#":
                break
            if ch in "'\"":
                quote = ch
            out.append(ch)
        i += 1
    return "".join(out)


def _bracket_depth(text: str) -> int:
    depth = 0
    quote = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        i += 1
    return depth


def _logical_lines(source: str) -> list[tuple[int, str, int]]:
    """(indent, text, line number) triples; comments stripped, blank lines
    skipped, bracketed continuations joined."""
    physical = source.split("\n")
    out: list[tuple[int, str, int]] = []
    i = 0
    while i < len(physical):
        raw = physical[i]
        code = _strip_comment(raw)
        if not code.strip():
            i += 1
            continue
        ws = code[: len(code) - len(code.lstrip())]
        if "\t" in ws:
            raise IndentError(f"line {i + 1}: tabs in indentation")
        indent = len(ws)
        text = code.strip()
        lineno = i + 1
        while _bracket_depth(text) > 0:
            i += 1
            if i >= len(physical):
                raise ParseError(f"line {lineno}: unclosed bracket")
            text += " " + _strip_comment(physical[i]).strip()
        out.append((indent, text, lineno))
        i += 1
    return out


# -------------------------------------------------------------------- parsing

_DEF_RE = re.compile(r"^def\s+([A-Za-z_]\w*)\s*\(\s*([^)]*)\s*\)\s*:$")
_IF_RE = re.compile(r"^if\s+(.*):$", re.DOTALL)
_ELIF_RE = re.compile(r"^elif\s+(.*):$", re.DOTALL)
_ELSE_RE = re.compile(r"^else\s*:$")
_WHILE_RE = re.compile(r"^while\s+(.*):$", re.DOTALL)
_FOR_RE = re.compile(r"^for\s+([A-Za-z_]\w*)\s+in\s+(.*):$", re.DOTALL)
_RETURN_RE = re.compile(r"^return(?:\s+(.*))?$", re.DOTALL)
_DECORATOR_RE = re.compile(r"^@(global_function|function|local_function)$")

_DECORATOR_KINDS = {
    "global_function": ActionKind.CALL_GLOBAL,
    "function": ActionKind.CALL_MIXED,
    "local_function": ActionKind.CALL_LOCAL,
}


def parse_program(source: str) -> CompileUnit:
    lines = _logical_lines(source)
    body, pos = _parse_block(lines, 0, 0 if not lines else lines[0][0])
    if pos != len(lines):
        ind, _, ln = lines[pos]
        raise IndentError(f"line {ln}: unexpected indent level {ind}")
    return CompileUnit(body=body)


def _parse_block(lines, pos: int, indent: int) -> tuple[list[Stmt], int]:
    stmts: list[Stmt] = []
    decorator: str | None = None
    while pos < len(lines):
        ind, text, ln = lines[pos]
        if ind < indent:
            break
        if ind > indent:
            raise IndentError(f"line {ln}: unexpected indent")
        m = _DECORATOR_RE.match(text)
        if m:
            if decorator is not None:
                raise CompileError(f"line {ln}: stacked decorators are not supported")
            decorator = m.group(1)
            pos += 1
            continue
        if decorator is not None and not _DEF_RE.match(text):
            raise CompileError(f"line {ln}: decorator must be followed by a def")
        stmt, pos = _parse_statement(lines, pos, indent, decorator)
        decorator = None
        stmts.append(stmt)
    if decorator is not None:
        raise CompileError("decorator at end of block with no def")
    return stmts, pos


def _child_block(lines, pos: int, indent: int, ln: int) -> tuple[list[Stmt], int]:
    if pos >= len(lines) or lines[pos][0] <= indent:
        raise IndentError(f"line {ln}: expected an indented block")
    return _parse_block(lines, pos, lines[pos][0])


def _parse_statement(lines, pos: int, indent: int, decorator: str | None):
    ind, text, ln = lines[pos]
    m = _DEF_RE.match(text)
    if m:
        params_src = m.group(2).strip()
        params = []
        if params_src:
            for p in params_src.split(","):
                p = p.strip()
                if not re.fullmatch(r"[A-Za-z_]\w*", p):
                    raise ParseError(f"line {ln}: bad parameter {p!r}")
                params.append(p)
        body, pos = _child_block(lines, pos + 1, indent, ln)
        kind = _DECORATOR_KINDS[decorator] if decorator else ActionKind.CALL_LOCAL
        return FuncDef(line=ln, name=m.group(1), params=params, kind=kind, body=body), pos
    m = _IF_RE.match(text)
    if m:
        branches = [Branch(condition_src=_condition(m.group(1), ln))]
        branches[0].body, pos = _child_block(lines, pos + 1, indent, ln)
        while pos < len(lines) and lines[pos][0] == indent:
            _, next_text, next_ln = lines[pos]
            m2 = _ELIF_RE.match(next_text)
            if m2:
                if branches[-1].condition_src is None:
                    raise CompileError(f"line {next_ln}: elif after else")
                br = Branch(condition_src=_condition(m2.group(1), next_ln))
                br.body, pos = _child_block(lines, pos + 1, indent, next_ln)
                branches.append(br)
                continue
            if _ELSE_RE.match(next_text):
                if branches[-1].condition_src is None:
                    raise CompileError(f"line {next_ln}: duplicate else")
                br = Branch(condition_src=None)
                br.body, pos = _child_block(lines, pos + 1, indent, next_ln)
                branches.append(br)
                continue
            break
        return IfChain(line=ln, branches=branches), pos
    if _ELIF_RE.match(text) or _ELSE_RE.match(text):
        raise CompileError(f"line {ln}: {text.split(':')[0]!r} without a matching if")
    m = _WHILE_RE.match(text)
    if m:
        stmt = While(line=ln, condition_src=_condition(m.group(1), ln))
        stmt.body, pos = _child_block(lines, pos + 1, indent, ln)
        return stmt, pos
    m = _FOR_RE.match(text)
    if m:
        stmt = For(line=ln, target=m.group(1), iterable_src=_condition(m.group(2), ln))
        stmt.body, pos = _child_block(lines, pos + 1, indent, ln)
        return stmt, pos
    m = _RETURN_RE.match(text)
    if m:
        expr_src = m.group(1)
        expr = _parse_expr(expr_src, ln) if expr_src and expr_src.strip() else None
        return Return(line=ln, expr=expr), pos + 1
    return _parse_simple(text, ln), pos + 1


def _condition(src: str, ln: int) -> str:
    src = src.strip()
    _parse_expr(src, ln)  # fail early with the line number
    return src


def _parse_expr(src: str, ln: int) -> ex.Expr:
    try:
        return ex.parse_expression(src)
    except (ParseError, ex.LexError) as exc:
        raise ParseError(f"line {ln}: {exc}") from exc


def _parse_simple(text: str, ln: int) -> Stmt:
    target, remainder = ex.strip_assignment(text)
    if target is not None:
        inner_target, _ = ex.strip_assignment(remainder)
        if inner_target is not None:
            raise MultiAssign(f"line {ln}: chained assignment is not supported")
    expr = _parse_expr(remainder, ln)
    if isinstance(expr, ex.Call) and isinstance(expr.func, ex.Name) and expr.func.id == "exec_node":
        return _parse_exec_node(expr, target, ln)
    if target is not None:
        return Assign(line=ln, target=target, expr=expr, source=text)
    return ExprStmt(line=ln, expr=expr, source=text)


_EXEC_FIELDS = {
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


def _parse_exec_node(call: ex.Call, target: str | None, ln: int) -> ExecNode:
    if call.args:
        raise CompileError(f"line {ln}: exec_node takes keyword arguments only")
    fields: dict = {}
    for name, value_expr in call.kwargs:
        if name not in _EXEC_FIELDS:
            raise UnknownKwarg(f"line {ln}: exec_node got unknown field {name!r}")
        if isinstance(value_expr, ex.Literal) and isinstance(value_expr.value, str):
            fields[name] = value_expr.value
        elif isinstance(value_expr, ex.ListLit) and all(
            isinstance(item, ex.Literal) and isinstance(item.value, str)
            for item in value_expr.items
        ):
            fields[name] = [item.value for item in value_expr.items]
        else:
            raise NonLiteralKwarg(
                f"line {ln}: exec_node field {name!r} must be a string literal "
                "or a list of string literals"
            )
    if "action" not in fields:
        raise CompileError(f"line {ln}: exec_node requires an action")
    return ExecNode(line=ln, assign_target=target, fields=fields)


# ------------------------------------------------------------------- lowering


class _Chain:
    """One linear lowering context: a name prefix, per-construct counters,
    and the set of nodes waiting for the next statement's head."""

    def __init__(self, graph: GraphModel, prefix: str, counters: dict | None = None):
        self.graph = graph
        self.prefix = prefix
        self.counters = counters if counters is not None else {}
        self.dangling: list[str] = []

    def alloc(self, construct: str) -> int:
        self.counters[construct] = self.counters.get(construct, 0) + 1
        return self.counters[construct]

    def auto_name(self, construct: str, number: int) -> str:
        return f"_{self.prefix}{construct}{number}"

    def patch_dangling(self, target: str) -> None:
        for name in self.dangling:
            self.graph.nodes[name].transitions.append(target)
        self.dangling = []

    def add(self, spec: NodeSpec, link: bool = True, falls_through: bool | None = None) -> NodeSpec:
        if link:
            self.patch_dangling(spec.name)
        self.graph.add_node(spec)
        if falls_through is None:
            falls_through = not spec.transitions
        if falls_through:
            self.dangling.append(spec.name)
        return spec

    def sub(self, suffix: str, shared_counters: dict | None = None) -> "_Chain":
        return _Chain(self.graph, f"{self.prefix}{suffix}", shared_counters)


class _Lowerer:
    def __init__(self, graph: GraphModel):
        self.graph = graph
        self.func_kinds: dict[str, ActionKind] = {}
        self.func_sigs: dict[str, str] = {}  # base -> root node name

    def run(self, unit: CompileUnit) -> None:
        funcs = unit.functions
        for fn in funcs:
            if fn.name in self.func_kinds:
                raise CompileError(f"function {fn.name!r} defined twice")
            self.func_kinds[fn.name] = fn.kind
            self.func_sigs[fn.name] = f"{fn.name}({','.join(fn.params)})"
        top = [s for s in unit.body if not isinstance(s, FuncDef)]
        main = _Chain(self.graph, "")
        self.lower_body(main, top)
        # top-level tails with nothing to fall through to keep empty transitions
        for fn in funcs:
            self.lower_function(fn)

    def lower_function(self, fn: FuncDef) -> None:
        chain = _Chain(self.graph, f"{fn.name}_")
        chain.alloc("node")  # the root consumes the first node counter
        root = NodeSpec(name=self.func_sigs[fn.name], action=ActionKind.TRANSITION)
        chain.add(root, link=False)
        chain.dangling = [root.name]
        self.lower_body(chain, fn.body)
        if chain.dangling:
            # fell off the end: return null
            none_node = NodeSpec(
                name=chain.auto_name("node", chain.alloc("node")),
                action=ActionKind.EXEC_CODE,
                instruction="None",
            )
            chain.add(none_node)
            ret = NodeSpec(
                name=chain.auto_name("node", chain.alloc("node")),
                action=ActionKind.TRANSITION,
                transitions=["return"],
            )
            chain.add(ret, falls_through=False)

    def lower_body(self, chain: _Chain, stmts: list[Stmt]) -> None:
        for stmt in stmts:
            self.lower_statement(chain, stmt)

    def lower_statement(self, chain: _Chain, stmt: Stmt) -> None:
        if isinstance(stmt, FuncDef):
            raise CompileError(
                f"line {stmt.line}: nested function definitions are not supported"
            )
        if isinstance(stmt, IfChain):
            self.lower_conditional(chain, stmt)
        elif isinstance(stmt, While):
            self.lower_while(chain, stmt)
        elif isinstance(stmt, For):
            self.lower_for(chain, stmt)
        elif isinstance(stmt, Return):
            self.lower_return(chain, stmt)
        elif isinstance(stmt, ExecNode):
            self.lower_exec_node(chain, stmt)
        elif isinstance(stmt, Assign):
            self.lower_simple(chain, stmt.expr, stmt.target, stmt.source)
        elif isinstance(stmt, ExprStmt):
            self.lower_simple(chain, stmt.expr, None, stmt.source)
        else:
            raise CompileError(f"cannot lower {type(stmt).__name__}")

    # ------------------------------------------------------------- constructs

    def lower_conditional(self, chain: _Chain, stmt: IfChain) -> None:
        branches = list(stmt.branches)
        if branches[-1].condition_src is not None:
            branches.append(Branch(condition_src=None))  # synthesized else
        if len(branches) > 26:
            raise CompileError(f"line {stmt.line}: more than 26 branches")
        number = chain.alloc("conditional")
        base = chain.auto_name("conditional", number)
        wildcard = f"{base}.*"
        if chain.dangling:
            chain.patch_dangling(wildcard)
        else:
            start = NodeSpec(
                name=f"{base}_start",
                action=ActionKind.TRANSITION,
                transitions=[wildcard],
            )
            chain.add(start, falls_through=False)
        shared: dict = {}
        tails: list[str] = []
        for i, branch in enumerate(branches):
            letter = chr(ord("a") + i)
            head = NodeSpec(
                name=f"{base}.{letter}",
                action=ActionKind.TRANSITION,
                boolean_condition=branch.condition_src or "",
            )
            chain.graph.add_node(head)
            sub = chain.sub(f"conditional{number}_", shared)
            sub.dangling = [head.name]
            self.lower_body(sub, branch.body)
            tails.extend(sub.dangling)
        chain.dangling = tails

    def lower_while(self, chain: _Chain, stmt: While) -> None:
        number = chain.alloc("whileloop")
        base = chain.auto_name("whileloop", number)
        wildcard = f"{base}.*"
        start = NodeSpec(
            name=f"{base}_start", action=ActionKind.TRANSITION, transitions=[wildcard]
        )
        chain.add(start, falls_through=False)
        head = NodeSpec(
            name=f"{base}.a",
            action=ActionKind.TRANSITION,
            boolean_condition=stmt.condition_src,
        )
        chain.graph.add_node(head)
        sub = chain.sub(f"whileloop{number}_")
        sub.dangling = [head.name]
        self.lower_body(sub, stmt.body)
        sub.patch_dangling(wildcard)  # back-edge straight to the check
        exit_head = NodeSpec(name=f"{base}.b", action=ActionKind.TRANSITION)
        chain.graph.add_node(exit_head)
        chain.dangling = [exit_head.name]

    def lower_for(self, chain: _Chain, stmt: For) -> None:
        number = chain.alloc("forloop")
        base = chain.auto_name("forloop", number)
        wildcard = f"{base}.*"
        ivar = f"{base}_i"
        init = NodeSpec(
            name=f"{base}_init",
            action=ActionKind.EXEC_CODE,
            instruction=f"{ivar} = 0",
        )
        chain.add(init)
        start = NodeSpec(
            name=f"{base}_start", action=ActionKind.TRANSITION, transitions=[wildcard]
        )
        chain.add(start, falls_through=False)
        # .a exits when the counter reaches the length; .b (last) runs the body
        exit_head = NodeSpec(
            name=f"{base}.a",
            action=ActionKind.TRANSITION,
            boolean_condition=f"{ivar} == len({stmt.iterable_src})",
        )
        chain.graph.add_node(exit_head)
        body_head = NodeSpec(name=f"{base}.b", action=ActionKind.TRANSITION)
        chain.graph.add_node(body_head)
        extract = NodeSpec(
            name=f"{base}_extract",
            action=ActionKind.EXEC_CODE,
            instruction=f"{stmt.target} = {stmt.iterable_src}[{ivar}]",
        )
        sub = chain.sub(f"forloop{number}_")
        sub.dangling = [body_head.name]
        sub.add(extract)
        self.lower_body(sub, stmt.body)
        increment = NodeSpec(
            name=f"{base}_inc",
            action=ActionKind.EXEC_CODE,
            instruction=f"{ivar} = {ivar} + 1",
            transitions=[wildcard],
        )
        sub.add(increment, falls_through=False)
        chain.dangling = [exit_head.name]

    # -------------------------------------------------------------- statements

    def lower_return(self, chain: _Chain, stmt: Return) -> None:
        expr = stmt.expr
        transition = "return"
        if expr is None:
            none_node = NodeSpec(
                name=chain.auto_name("node", chain.alloc("node")),
                action=ActionKind.EXEC_CODE,
                instruction="None",
            )
            chain.add(none_node)
        elif isinstance(expr, ex.Name):
            transition = f"return {expr.id}"
        else:
            residual = self.decompose_calls(chain, expr)
            if isinstance(residual, ex.Name):
                transition = f"return {residual.id}"
            else:
                value_node = NodeSpec(
                    name=chain.auto_name("node", chain.alloc("node")),
                    action=ActionKind.EXEC_CODE,
                    instruction=ex.expr_source(residual),
                )
                chain.add(value_node)
        ret = NodeSpec(
            name=chain.auto_name("node", chain.alloc("node")),
            action=ActionKind.TRANSITION,
            transitions=[transition],
        )
        chain.add(ret, falls_through=False)

    def lower_exec_node(self, chain: _Chain, stmt: ExecNode) -> None:
        number = chain.alloc("node")
        fields = dict(stmt.fields)
        name = fields.pop("name", None) or chain.auto_name("node", number)
        action = ActionKind.parse(fields.pop("action"))
        instruction = fields.pop("instruction", "")
        if stmt.assign_target:
            instruction = f"{stmt.assign_target} = {instruction}"
        spec = NodeSpec(name=name, action=action, instruction=instruction)
        for key, value in fields.items():
            if key in NodeSpec.LIST_FIELDS and isinstance(value, str):
                value = [value]
            setattr(spec, key, value)
        chain.add(spec)

    def lower_simple(self, chain: _Chain, expr: ex.Expr, target: str | None, source: str) -> None:
        if self._is_callable_call(expr):
            rebuilt = ex.Call(
                expr.func,
                [self.decompose_calls(chain, a) for a in expr.args],
                [(k, self.decompose_calls(chain, v)) for k, v in expr.kwargs],
            )
            if rebuilt == expr:
                instruction = source
            else:
                instruction = (f"{target} = " if target else "") + ex.expr_source(rebuilt)
            self._emit_call(chain, expr.func.id, instruction)
            return
        residual = self.decompose_calls(chain, expr)
        if residual == expr:
            instruction = source
        else:
            instruction = (f"{target} = " if target else "") + ex.expr_source(residual)
        node = NodeSpec(
            name=chain.auto_name("node", chain.alloc("node")),
            action=ActionKind.EXEC_CODE,
            instruction=instruction,
        )
        chain.add(node)

    def _is_callable_call(self, expr: ex.Expr) -> bool:
        return (
            isinstance(expr, ex.Call)
            and isinstance(expr.func, ex.Name)
            and expr.func.id in self.func_kinds
        )

    def _emit_call(self, chain: _Chain, callee: str, instruction: str) -> NodeSpec:
        node = NodeSpec(
            name=chain.auto_name("node", chain.alloc("node")),
            action=self.func_kinds[callee],
            instruction=instruction,
        )
        chain.add(node)
        return node

    def decompose_calls(self, chain: _Chain, expr: ex.Expr) -> ex.Expr:
        """Replace callable-node calls inside ``expr`` with hidden temporaries
        bound by sequential call nodes; returns the residual expression."""
        if isinstance(expr, (ex.Literal, ex.Name)):
            return expr
        if isinstance(expr, ex.Unary):
            return ex.Unary(expr.op, self.decompose_calls(chain, expr.operand))
        if isinstance(expr, ex.Binary):
            left = self.decompose_calls(chain, expr.left)
            right = self.decompose_calls(chain, expr.right)
            return ex.Binary(expr.op, left, right)
        if isinstance(expr, ex.Call):
            func = expr.func
            args = [self.decompose_calls(chain, a) for a in expr.args]
            kwargs = [(k, self.decompose_calls(chain, v)) for k, v in expr.kwargs]
            if isinstance(func, ex.Name) and func.id in self.func_kinds:
                tmp = f"_tmp{chain.alloc('tmp')}"
                call_src = f"{tmp} = {ex.expr_source(ex.Call(func, args, kwargs))}"
                self._emit_call(chain, func.id, call_src)
                return ex.Name(tmp)
            return ex.Call(self.decompose_calls(chain, func), args, kwargs)
        if isinstance(expr, ex.Attribute):
            return ex.Attribute(self.decompose_calls(chain, expr.value), expr.attr)
        if isinstance(expr, ex.Index):
            return ex.Index(
                self.decompose_calls(chain, expr.value),
                self.decompose_calls(chain, expr.index),
            )
        if isinstance(expr, ex.Slice):
            return ex.Slice(
                self.decompose_calls(chain, expr.value),
                self.decompose_calls(chain, expr.start) if expr.start else None,
                self.decompose_calls(chain, expr.stop) if expr.stop else None,
            )
        if isinstance(expr, ex.ListLit):
            return ex.ListLit([self.decompose_calls(chain, e) for e in expr.items])
        if isinstance(expr, ex.MapLit):
            return ex.MapLit(
                [
                    (self.decompose_calls(chain, k), self.decompose_calls(chain, v))
                    for k, v in expr.items
                ]
            )
        return expr


def compile_unit(unit: CompileUnit, config: AutogramConfig | None = None) -> GraphModel:
    graph = GraphModel(config)
    if not unit.body:
        warnings.warn("empty program compiles to an empty graph", CompileWarning)
        return graph
    _Lowerer(graph).run(unit)
    return graph


def compile_source(source: str, config: AutogramConfig | None = None) -> GraphModel:
    return compile_unit(parse_program(source), config)
