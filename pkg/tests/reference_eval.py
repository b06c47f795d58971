"""Independent reference interpreter used as a test oracle.

Executes the same python-like programs the compiler accepts, but directly
over Python's own ast, with the engine's frame visibility rules implemented
from the written contract:

- a local call sees only its arguments; the caller keeps its variables
- a global call sees through to the caller chain and merges its variables
  back into the caller when it returns
- a mixed call sees through to the caller chain but is erased on return,
  except for the returned value

Nothing here imports engine code, so agreement between this interpreter and
the compiled graphs is meaningful evidence rather than a tautology.
"""

from __future__ import annotations

import ast


class RefError(Exception):
    pass


class _Return(Exception):
    def __init__(self, value):
        self.value = value


_DECORATOR_KINDS = {
    "local_function": "local",
    "global_function": "global",
    "function": "mixed",
}


def _range_list(*args):
    return list(range(*args))


_BUILTINS = {
    "len": len,
    "str": str,
    "int": int,
    "float": float,
    "bool": bool,
    "range": _range_list,
    "sorted": sorted,
    "min": min,
    "max": max,
    "abs": abs,
    "sum": sum,
}

_BIN_OPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.FloorDiv: lambda a, b: a // b,
    ast.Mod: lambda a, b: a % b,
    ast.Pow: lambda a, b: a**b,
}

_CMP_OPS = {
    ast.Eq: lambda a, b: a == b,
    ast.NotEq: lambda a, b: a != b,
    ast.Lt: lambda a, b: a < b,
    ast.LtE: lambda a, b: a <= b,
    ast.Gt: lambda a, b: a > b,
    ast.GtE: lambda a, b: a >= b,
    ast.In: lambda a, b: a in b,
    ast.NotIn: lambda a, b: a not in b,
}


class _Frame:
    def __init__(self, kind: str, variables: dict | None = None):
        self.kind = kind
        self.variables = variables if variables is not None else {}


class ReferenceProgram:
    def __init__(self, source: str):
        tree = ast.parse(source)
        self.functions: dict[str, tuple[list[str], list, str]] = {}
        self.top: list = []
        for node in tree.body:
            if isinstance(node, ast.FunctionDef):
                kind = "local"
                for dec in node.decorator_list:
                    if isinstance(dec, ast.Name) and dec.id in _DECORATOR_KINDS:
                        kind = _DECORATOR_KINDS[dec.id]
                params = [a.arg for a in node.args.args]
                self.functions[node.name] = (params, node.body, kind)
            else:
                self.top.append(node)
        self.max_depth = 0

    # ------------------------------------------------------------- frames

    def _lookup(self, stack: list[_Frame], name: str):
        for frame in reversed(stack):
            if name in frame.variables:
                return frame.variables[name]
            if frame.kind == "local":
                break
        raise RefError(f"name {name!r} is not defined")

    def _assign(self, stack: list[_Frame], name: str, value) -> None:
        stack[-1].variables[name] = value

    # ------------------------------------------------------------ execution

    def run_function(self, name: str, args: list, kind: str | None = None):
        stack = [_Frame("root")]
        self.max_depth = 0
        return self._call(stack, name, list(args), kind)

    def run_top(self) -> dict:
        """Executes the top-level statements; returns the root variables."""
        stack = [_Frame("root")]
        self.max_depth = 0
        for node in self.top:
            self._exec(stack, node)
        return dict(stack[0].variables)

    def _call(self, stack: list[_Frame], name: str, args: list, kind: str | None = None):
        if name not in self.functions:
            raise RefError(f"no function {name!r}")
        params, body, declared_kind = self.functions[name]
        if len(args) != len(params):
            raise RefError(f"{name} takes {len(params)} args, got {len(args)}")
        frame = _Frame(kind or declared_kind, dict(zip(params, args)))
        stack.append(frame)
        self.max_depth = max(self.max_depth, len(stack) - 1)
        value = None
        try:
            for node in body:
                self._exec(stack, node)
        except _Return as ret:
            value = ret.value
        finally:
            popped = stack.pop()
            if popped.kind == "global":
                stack[-1].variables.update(popped.variables)
        return value

    def _exec(self, stack: list[_Frame], node) -> None:
        if isinstance(node, ast.Assign):
            if len(node.targets) != 1 or not isinstance(node.targets[0], ast.Name):
                raise RefError("only single name assignment is supported")
            self._assign(stack, node.targets[0].id, self._eval(stack, node.value))
        elif isinstance(node, ast.Expr):
            self._eval(stack, node.value)
        elif isinstance(node, ast.Return):
            raise _Return(self._eval(stack, node.value) if node.value else None)
        elif isinstance(node, ast.If):
            if self._truthy(self._eval(stack, node.test)):
                for child in node.body:
                    self._exec(stack, child)
            else:
                for child in node.orelse:
                    self._exec(stack, child)
        elif isinstance(node, ast.While):
            while self._truthy(self._eval(stack, node.test)):
                for child in node.body:
                    self._exec(stack, child)
        elif isinstance(node, ast.For):
            if not isinstance(node.target, ast.Name):
                raise RefError("for targets must be plain names")
            items = self._eval(stack, node.iter)
            for item in items:
                self._assign(stack, node.target.id, item)
                for child in node.body:
                    self._exec(stack, child)
        else:
            raise RefError(f"unsupported statement {type(node).__name__}")

    def _truthy(self, value) -> bool:
        return bool(value)

    def _eval(self, stack: list[_Frame], node):
        if isinstance(node, ast.Constant):
            return node.value
        if isinstance(node, ast.Name):
            return self._lookup(stack, node.id)
        if isinstance(node, ast.BinOp):
            op = _BIN_OPS.get(type(node.op))
            if op is None:
                raise RefError(f"unsupported operator {type(node.op).__name__}")
            return op(self._eval(stack, node.left), self._eval(stack, node.right))
        if isinstance(node, ast.UnaryOp):
            if isinstance(node.op, ast.USub):
                return -self._eval(stack, node.operand)
            if isinstance(node.op, ast.Not):
                return not self._truthy(self._eval(stack, node.operand))
            raise RefError("unsupported unary operator")
        if isinstance(node, ast.BoolOp):
            values = node.values
            if isinstance(node.op, ast.And):
                result = self._eval(stack, values[0])
                for v in values[1:]:
                    if not self._truthy(result):
                        return result
                    result = self._eval(stack, v)
                return result
            result = self._eval(stack, values[0])
            for v in values[1:]:
                if self._truthy(result):
                    return result
                result = self._eval(stack, v)
            return result
        if isinstance(node, ast.Compare):
            if len(node.ops) != 1:
                raise RefError("chained comparisons are not supported")
            op = _CMP_OPS.get(type(node.ops[0]))
            if op is None:
                raise RefError("unsupported comparison")
            return op(self._eval(stack, node.left), self._eval(stack, node.comparators[0]))
        if isinstance(node, ast.List):
            return [self._eval(stack, e) for e in node.elts]
        if isinstance(node, ast.Dict):
            return {
                self._eval(stack, k): self._eval(stack, v)
                for k, v in zip(node.keys, node.values)
            }
        if isinstance(node, ast.Subscript):
            base = self._eval(stack, node.value)
            if isinstance(node.slice, ast.Slice):
                lo = self._eval(stack, node.slice.lower) if node.slice.lower else None
                hi = self._eval(stack, node.slice.upper) if node.slice.upper else None
                return base[lo:hi]
            return base[self._eval(stack, node.slice)]
        if isinstance(node, ast.Call):
            args = [self._eval(stack, a) for a in node.args]
            if isinstance(node.func, ast.Attribute):
                receiver = self._eval(stack, node.func.value)
                return getattr(receiver, node.func.attr)(*args)
            if not isinstance(node.func, ast.Name):
                raise RefError("unsupported call form")
            name = node.func.id
            if name in self.functions:
                return self._call(stack, name, args)
            if name in _BUILTINS:
                return _BUILTINS[name](*args)
            raise RefError(f"unknown function {name!r}")
        raise RefError(f"unsupported expression {type(node).__name__}")
